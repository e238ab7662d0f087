#ifndef PLEADERS_H
#define PLEADERS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PlNeighborhood {
  /**
   * The cube and its 3^d - 1 neighbours.
   */
  PL_FULL = 0,
  /**
   * The cube alone.
   */
  PL_RESTRICTED = 1,
} PlNeighborhood;

/**
 * Result code of every fallible call.
 */
typedef enum PlStatus {
  PL_OK = 0,
  /**
   * A required pointer argument was NULL.
   */
  PL_ERR_NULL_POINTER = 1,
  /**
   * Invalid parameter or input shape.
   */
  PL_ERR_USAGE = 2,
  /**
   * Data too short, degenerate, or with too few scales.
   */
  PL_ERR_DATA = 3,
  /**
   * Singular regression, invalid correction or similar.
   */
  PL_ERR_NUMERICAL = 4,
  PL_ERR_IO = 5,
  /**
   * A Rust panic was caught at the boundary.
   */
  PL_ERR_PANIC = 6,
} PlStatus;

typedef struct PlAnalysis PlAnalysis;

typedef struct PlLeaders PlLeaders;

typedef struct PlPyramid PlPyramid;

typedef struct PlSignal PlSignal;

/**
 * Estimation settings. Obtain defaults from `pl_config_default`.
 */
typedef struct PlConfig {
  size_t j1;
  /**
   * Coarsest octave; 0 selects the coarsest one with enough leaders.
   */
  size_t j2;
  bool corrected;
  enum PlNeighborhood neighborhood;
  /**
   * Highest log-cumulant order, 1..=4.
   */
  size_t m_max;
  /**
   * Uniform q grid `q_min + i * q_step`, `i < q_count`.
   */
  double q_min;
  double q_step;
  size_t q_count;
  /**
   * Weight octaves by leader counts (true) or equally (false).
   */
  bool count_weights;
} PlConfig;

/**
 * Scalar results of one analysis.
 */
typedef struct PlSummary {
  /**
   * Log-cumulants; entries above `m_max` are NaN.
   */
  double cumulants[4];
  size_t m_max;
  /**
   * Wavelet scaling function at p; NaN for p = infinity.
   */
  double eta_p;
  bool correction_applied;
  size_t j1;
  size_t j2;
  /**
   * Abscissa of the spectrum maximum.
   */
  double mode;
  /**
   * Number of q values (length of the curve arrays).
   */
  size_t q_count;
} PlSummary;

typedef struct PlMrwParams {
  double hurst;
  double lambda;
  /**
   * Fractional differentiation order.
   */
  double nu;
  size_t n;
  /**
   * Correlation length; 0 means `n`.
   */
  size_t corr_len;
  uint64_t seed;
} PlMrwParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. Valid until the
 * next call into the library from the same thread.
 */
const char *pl_last_error(void);

/**
 * Static name of a status code.
 */
const char *pl_status_name(enum PlStatus status);

const char *pl_version(void);

/**
 * Wavelet pyramid of `n` samples with a Daubechies wavelet.
 *
 * # Safety
 * `x` must point to `n` readable doubles; `out` must be writable.
 */
enum PlStatus pl_dwt_1d(const double *x,
                        size_t n,
                        size_t vanishing_moments,
                        struct PlPyramid **out);

/**
 * Wavelet pyramid of a `side × side` row-major field.
 *
 * # Safety
 * `x` must point to `side * side` readable doubles; `out` must be writable.
 */
enum PlStatus pl_dwt_2d(const double *x,
                        size_t side,
                        size_t vanishing_moments,
                        struct PlPyramid **out);

/**
 * # Safety
 * `p` must come from `pl_dwt_1d`/`pl_dwt_2d` and not be used afterwards.
 */
void pl_pyramid_free(struct PlPyramid *p);

/**
 * Number of octaves and, if `valid_counts` is not NULL, the valid
 * coefficient count of octaves `1..=min(count, capacity)`.
 *
 * # Safety
 * `p` must be a live pyramid; `count` writable; `valid_counts` NULL or
 * writable for `capacity` entries.
 */
enum PlStatus pl_pyramid_octaves(const struct PlPyramid *p,
                                 size_t *count,
                                 size_t *valid_counts,
                                 size_t capacity);

/**
 * p-leaders of a pyramid; `p` may be `INFINITY` for wavelet leaders.
 *
 * # Safety
 * `pyramid` must be live; `out` writable.
 */
enum PlStatus pl_leaders_compute(const struct PlPyramid *pyramid,
                                 double p,
                                 enum PlNeighborhood neighborhood,
                                 struct PlLeaders **out);

/**
 * Borrowed view of octave `j` (1-based). Pointers stay valid while the
 * handle lives.
 *
 * # Safety
 * `leaders` must be live; every out-pointer writable.
 */
enum PlStatus pl_leaders_octave(const struct PlLeaders *leaders,
                                size_t j,
                                size_t *rows,
                                size_t *cols,
                                const double **values,
                                const bool **valid);

/**
 * # Safety
 * `l` must come from `pl_leaders_compute` and not be used afterwards.
 */
void pl_leaders_free(struct PlLeaders *l);

struct PlConfig pl_config_default(void);

/**
 * Full p-leader estimation at one `p`. `config` may be NULL for defaults.
 *
 * # Safety
 * `pyramid` must be live; `config` NULL or readable; `out` writable.
 */
enum PlStatus pl_analyze(const struct PlPyramid *pyramid,
                         double p,
                         const struct PlConfig *config,
                         struct PlAnalysis **out);

/**
 * # Safety
 * `a` must be live; `out` writable.
 */
enum PlStatus pl_analysis_summary(const struct PlAnalysis *a, struct PlSummary *out);

/**
 * Copies `q`, `ζ(q)`, `h(q)` and `L(q)`; any array may be NULL. Each
 * non-NULL array must hold `capacity >= q_count` entries.
 *
 * # Safety
 * `a` must be live; non-NULL arrays writable for `capacity` doubles.
 */
enum PlStatus pl_analysis_curves(const struct PlAnalysis *a,
                                 double *q,
                                 double *zeta,
                                 double *h,
                                 double *l,
                                 size_t capacity);

/**
 * # Safety
 * `a` must come from `pl_analyze` and not be used afterwards.
 */
void pl_analysis_free(struct PlAnalysis *a);

/**
 * Slope of the log of the largest coefficient per octave over `j1..=j2`.
 *
 * # Safety
 * `pyramid` must be live; `out` writable.
 */
enum PlStatus pl_hmin(const struct PlPyramid *pyramid, size_t j1, size_t j2, double *out);

/**
 * Estimated critical Lebesgue index (`INFINITY` when unbounded on the grid).
 *
 * # Safety
 * `pyramid` must be live; `out` writable.
 */
enum PlStatus pl_p0(const struct PlPyramid *pyramid, double *out);

/**
 * MFDFA log-cumulants `c1..c4` of a series over dyadic scales `2^j1..2^j2`.
 *
 * # Safety
 * `x` must hold `n` doubles; `cumulants` must be writable for 4 doubles.
 */
enum PlStatus pl_mfdfa_cumulants(const double *x,
                                 size_t n,
                                 size_t degree,
                                 size_t j1,
                                 size_t j2,
                                 double *cumulants);

struct PlMrwParams pl_mrw_params_default(void);

/**
 * Multifractal random walk sample.
 *
 * # Safety
 * `params` readable; `out` writable.
 */
enum PlStatus pl_gen_mrw(const struct PlMrwParams *params, struct PlSignal **out);

/**
 * Borrowed samples of a signal, valid while the handle lives.
 *
 * # Safety
 * `s` must be live; `data` and `len` writable.
 */
enum PlStatus pl_signal_data(const struct PlSignal *s, const double **data, size_t *len);

/**
 * # Safety
 * `s` must come from a generator and not be used afterwards.
 */
void pl_signal_free(struct PlSignal *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PLEADERS_H */
