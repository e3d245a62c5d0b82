#include <stdio.h>
#include "subrad.h"

int main(void) {
    SubradParams *p = subrad_params_new();
    SubradEnsemble *e = NULL;
    double n_eff = 0.0, c = 0.0;

    if (subrad_ensemble_sample(p, SUBRAD_KIND_COMMENSURATE, true, 50, 2, &e) != SUBRAD_STATUS_OK)
        return 1;
    if (subrad_ensemble_effective_atom_number(e, &n_eff) != SUBRAD_STATUS_OK || n_eff < 49.9)
        return 2;
    if (subrad_cg_coefficient(0, 5, &c) != SUBRAD_STATUS_INVALID_ARGUMENT)
        return 3;
    if (subrad_last_error() == NULL)
        return 4;
    subrad_ensemble_free(e);
    subrad_params_free(p);
    printf("ok %s\n", subrad_version());
    return 0;
}
