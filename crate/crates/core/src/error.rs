use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("malformed scenario: {0}")]
    MalformedScenario(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("lambda = {lambda} is outside the image of -z/w")]
    OutOfImage { lambda: f64 },

    #[error("{what} did not converge after {iterations} iterations")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
    },

    #[error("threshold merit {eta_star} outside the merit range ({lo}, {hi})")]
    BadThreshold { eta_star: f64, lo: f64, hi: f64 },

    #[error("allocation table is not weakly increasing at knot {index}")]
    NotMonotone { index: usize },

    #[error("allocation table value {value} at knot {index} is outside [0, 1]")]
    AllocationRange { index: usize, value: f64 },

    #[error(
        "merit is not aligned with beta/z(alpha): dispersion {dispersion:e} exceeds {tolerance:e}"
    )]
    NotKnifeEdge { dispersion: f64, tolerance: f64 },

    #[error("required ordeal {q_b} exceeds the cap {q_bar}")]
    OrdealCapExceeded { q_b: f64, q_bar: f64 },

    #[error("mechanism is not equitable: allocation spread {spread:e} exceeds {tolerance:e}")]
    NotEquitable { spread: f64, tolerance: f64 },

    #[error(
        "degenerate jump: levels must strictly increase (x {x} -> {x_plus}, q {q} -> {q_plus})"
    )]
    DegenerateJump {
        x: f64,
        x_plus: f64,
        q: f64,
        q_plus: f64,
    },

    #[error("contour at level {level} escaped the rectangle: {reason}")]
    ContourEscape { level: f64, reason: String },

    #[error("LP solver failure: {0}")]
    SolverFailure(String),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
