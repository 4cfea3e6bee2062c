#include <math.h>
#include <stdio.h>
#include <string.h>

#include "sgat.h"

int main(void) {
    double mu = 0.0, log_sigma = 0.0, target = 0.0, nll = 0.0;
    if (sgat_gaussian_nll(&mu, &log_sigma, &target, 1, &nll) != SGAT_STATUS_OK) return 1;
    if (fabs(nll - 0.5 * log(2.0 * M_PI)) > 1e-12) return 2;

    SgatCliff *cliff = NULL;
    if (sgat_cliff_new(0.0, 7, &cliff) != SGAT_STATUS_OK) return 3;
    size_t state = 0, next = 0;
    double reward = 0.0;
    bool terminal = false;
    sgat_cliff_reset(cliff, &state);
    /* Right from the start falls off the cliff. */
    if (sgat_cliff_step(cliff, state, 3, &next, &reward, &terminal) != SGAT_STATUS_OK) return 4;
    if (!terminal || reward > -10.0) return 5;
    sgat_cliff_free(cliff);

    if (sgat_cliff_new(2.0, 7, &cliff) != SGAT_STATUS_CONFIG) return 6;
    if (sgat_last_error_message() == NULL) return 7;

    char *csv = NULL;
    if (sgat_run_experiment("experiment = \"toy\"\neval_episodes = 100\n", &csv) != SGAT_STATUS_OK) return 8;
    if (strncmp(csv, "experiment,", 11) != 0) return 9;
    sgat_string_free(csv);
    printf("ok\n");
    return 0;
}
