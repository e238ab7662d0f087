#include <math.h>
#include <stdio.h>
#include "pleaders.h"

#define CHECK(call)                                                        \
  do {                                                                     \
    PlStatus s_ = (call);                                                  \
    if (s_ != PL_OK) {                                                     \
      const char *m_ = pl_last_error();                                    \
      fprintf(stderr, "%s: %s (%s)\n", #call, pl_status_name(s_),          \
              m_ ? m_ : "");                                               \
      return 1;                                                            \
    }                                                                      \
  } while (0)

int main(void) {
  PlMrwParams mp = pl_mrw_params_default();
  mp.n = 1 << 14;
  mp.seed = 7;
  PlSignal *sig = NULL;
  CHECK(pl_gen_mrw(&mp, &sig));
  const double *x = NULL;
  size_t n = 0;
  CHECK(pl_signal_data(sig, &x, &n));

  PlPyramid *pyr = NULL;
  CHECK(pl_dwt_1d(x, n, 2, &pyr));

  PlConfig cfg = pl_config_default();
  PlAnalysis *an = NULL;
  CHECK(pl_analyze(pyr, 2.0, &cfg, &an));
  PlSummary sum;
  CHECK(pl_analysis_summary(an, &sum));
  double zeta[64];
  CHECK(pl_analysis_curves(an, NULL, zeta, NULL, NULL, 64));

  PlLeaders *lead = NULL;
  CHECK(pl_leaders_compute(pyr, INFINITY, PL_FULL, &lead));
  size_t rows = 0, cols = 0;
  const double *vals = NULL;
  const bool *valid = NULL;
  CHECK(pl_leaders_octave(lead, 1, &rows, &cols, &vals, &valid));

  /* error path: the call must fail and leave a message */
  PlPyramid *bad = NULL;
  PlStatus s = pl_dwt_1d(x, 3, 2, &bad);
  if (s == PL_OK || pl_last_error() == NULL) {
    fprintf(stderr, "expected failure on a 3-sample signal\n");
    return 1;
  }
  if (pl_dwt_1d(NULL, 16, 2, &bad) != PL_ERR_NULL_POINTER) return 1;

  printf("version %s\n", pl_version());
  printf("n %zu\n", n);
  printf("c1 %.6f\n", sum.cumulants[0]);
  printf("c2 %.6f\n", sum.cumulants[1]);
  printf("zeta0 %.17g\n", zeta[sum.q_count / 2]);
  printf("octave1 %zu\n", rows * cols);

  pl_leaders_free(lead);
  pl_analysis_free(an);
  pl_pyramid_free(pyr);
  pl_signal_free(sig);
  pl_pyramid_free(NULL);
  return 0;
}
