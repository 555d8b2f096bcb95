#include <math.h>
#include <stdio.h>
#include <string.h>
#include "equiscreen.h"

static const char *S1 =
    "[domain]\nalpha = 0 1\nbeta = 1 2\n"
    "[utility]\nw = exp(1, 1)\nz = exp(1, -1)\n"
    "[merit]\neta = weighted_sum(1, 1)\n"
    "[grid]\nn_alpha = 11\nn_beta = 11\n"
    "[mechanism]\nkind = threshold\neta_star = 2\n";

int main(void) {
    EsScenario *s = NULL;
    EsMechanism *m = NULL;
    double x, p, q;
    char msg[256];
    size_t need = 0;

    if (es_scenario_parse(S1, NULL, 0, &s) != ES_STATUS_OK) return 1;
    if (es_mechanism_build(s, &m) != ES_STATUS_OK) return 2;
    if (es_mechanism_bundle(m, 0.9, 1.9, &x, &p, &q) != ES_STATUS_OK || x != 1.0) return 3;
    if (es_mechanism_bundle(m, 0.1, 1.1, &x, &p, &q) != ES_STATUS_OK || x != 0.0) return 4;
    if (fabs(es_angle(-1.0) - 2.356194490192345) > 1e-12) return 5;
    if (es_scenario_parse("[domain]\nalpha = x\n", NULL, 0, &s) != ES_STATUS_PARSE) return 6;
    if (es_last_error(msg, sizeof msg, &need) != ES_STATUS_OK || strstr(msg, "line 2") == NULL) return 7;
    es_mechanism_free(m);
    es_scenario_free(s);
    printf("ok %s\n", es_version());
    return 0;
}
