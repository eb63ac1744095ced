#include <stdio.h>
#include "cohproj.h"

int main(void) {
    const double phi[9] = {0, 0, 0, 0, 1, 0, 0, 0, 0};
    CpProjector *e = NULL;
    if (cp_projector_spectral(phi, NULL, 3, 0.5, &e) != CP_STATUS_OK) {
        fprintf(stderr, "%s\n", cp_last_error());
        return 1;
    }
    size_t rank = 0;
    cp_projector_rank(e, &rank);
    cp_projector_free(e);

    CpComplex z;
    if (cp_overlap_closed(0.0, 0.0, 0.0, 0.0, &z) != CP_STATUS_OK || z.re != 1.0) {
        return 1;
    }
    if (cp_overlap_closed(0.0, 0.0, 0.0, 0.0, NULL) != CP_STATUS_NULL_POINTER || cp_last_error() == NULL) {
        return 1;
    }
    printf("rank %zu\n", rank);
    return 0;
}
