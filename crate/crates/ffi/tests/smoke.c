#include <math.h>
#include <stdio.h>
#include "skspline.h"

#define CHECK(call)                                                         \
    do {                                                                    \
        SkStatus s_ = (call);                                               \
        if (s_ != SK_STATUS_OK) {                                           \
            fprintf(stderr, "%s failed: %d %s\n", #call, (int)s_,           \
                    sk_last_error_message());                               \
            return 1;                                                       \
        }                                                                   \
    } while (0)

int main(void) {
    const double a[4] = {1.0, 0.5, 0.0, 0.8660254037844386};
    const double b[4] = {1.0, 0.0, 0.0, 1.0};
    SkLattice *lat = NULL;
    SkKernel *ker = NULL;
    SkFundamental *f = NULL;
    CHECK(sk_lattice_new(2, a, &lat));
    CHECK(sk_kernel_gaussian_new(2, b, &ker));
    CHECK(sk_fundamental_new(lat, ker, 64, &f));

    double residual = 1.0;
    CHECK(sk_fundamental_cardinality_residual(f, 3, &residual));
    double origin[2] = {0.0, 0.0}, v = 0.0;
    CHECK(sk_fundamental_eval(f, origin, 2, &v));
    printf("cardinality residual %.3e, value at origin %.17g\n", residual, v);

    if (sk_fundamental_new(lat, ker, 7, &f) != SK_STATUS_INVALID_INPUT) {
        fprintf(stderr, "odd grid accepted\n");
        return 1;
    }
    sk_fundamental_free(f);
    sk_kernel_free(ker);
    sk_lattice_free(lat);
    return (residual < 1e-6 && fabs(v - 1.0) < 1e-6) ? 0 : 1;
}
