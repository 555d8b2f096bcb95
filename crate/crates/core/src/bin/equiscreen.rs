fn main() {
    std::process::exit(equiscreen::cli::run(std::env::args_os()));
}
