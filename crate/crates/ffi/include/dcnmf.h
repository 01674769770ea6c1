#ifndef DCNMF_H
#define DCNMF_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes; the nonzero values match the command-line exit codes.
typedef enum DcnmfStatus {
  DCNMF_STATUS_OK = 0,
  // Bad argument, domain, dimension or constraint problem.
  DCNMF_STATUS_INVALID = 2,
  // A multiplier solve failed.
  DCNMF_STATUS_SOLVER = 3,
  // File or parse error.
  DCNMF_STATUS_IO = 4,
  // A Rust panic was caught at the boundary.
  DCNMF_STATUS_INTERNAL = 5,
} DcnmfStatus;

typedef struct DcnmfFit DcnmfFit;

typedef struct DcnmfMatrix DcnmfMatrix;

// Solver settings. Obtain defaults from [`dcnmf_options_default`].
typedef struct DcnmfOptions {
  size_t max_iters;
  double beta;
  uint64_t seed;
  double tol_residual;
  double floor_eps;
  size_t objective_every;
} DcnmfOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread, or NULL. Valid until the next
// failing call on the same thread.
const char *dcnmf_last_error(void);

struct DcnmfOptions dcnmf_options_default(void);

// Copies `rows * cols` row-major values into a new matrix.
//
// # Safety
// `data` must point to `rows * cols` readable doubles; `out` must be writable.
enum DcnmfStatus dcnmf_matrix_new(size_t rows,
                                  size_t cols,
                                  const double *data,
                                  struct DcnmfMatrix **out);

// Reads a CSV or MatrixMarket file.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum DcnmfStatus dcnmf_matrix_load(const char *path, struct DcnmfMatrix **out);

// # Safety
// `m` and `path` must be valid.
enum DcnmfStatus dcnmf_matrix_save(const struct DcnmfMatrix *m, const char *path);

// # Safety
// `m` must be NULL or a handle from this library not yet freed.
void dcnmf_matrix_free(struct DcnmfMatrix *m);

// # Safety
// `m` must be valid.
size_t dcnmf_matrix_rows(const struct DcnmfMatrix *m);

// # Safety
// `m` must be valid.
size_t dcnmf_matrix_cols(const struct DcnmfMatrix *m);

// Writes the entries row-major into `dst`, which holds `len` doubles.
//
// # Safety
// `dst` must point to `len` writable doubles.
enum DcnmfStatus dcnmf_matrix_copy(const struct DcnmfMatrix *m, double *dst, size_t len);

// `D_β(V | WH)`.
//
// # Safety
// All pointers must be valid.
enum DcnmfStatus dcnmf_beta_divergence(const struct DcnmfMatrix *v,
                                       const struct DcnmfMatrix *w,
                                       const struct DcnmfMatrix *h,
                                       double beta,
                                       double *out);

// Unconstrained multiplicative updates.
//
// # Safety
// `v`, `opts` and `out` must be valid.
enum DcnmfStatus dcnmf_fit_baseline(const struct DcnmfMatrix *v,
                                    size_t rank,
                                    const struct DcnmfOptions *opts,
                                    struct DcnmfFit **out);

// Columns of H on the unit simplex.
//
// # Safety
// `v`, `opts` and `out` must be valid.
enum DcnmfStatus dcnmf_fit_ssnmf(const struct DcnmfMatrix *v,
                                 size_t rank,
                                 const struct DcnmfOptions *opts,
                                 struct DcnmfFit **out);

// Constraints given in the text format of the command-line tool.
//
// # Safety
// `v`, `constraints`, `opts` and `out` must be valid.
enum DcnmfStatus dcnmf_fit_constrained(const struct DcnmfMatrix *v,
                                       size_t rank,
                                       const char *constraints,
                                       const struct DcnmfOptions *opts,
                                       struct DcnmfFit **out);

// KL fit with column-stochastic W and a log-det volume penalty of weight `lambda`.
//
// # Safety
// `v`, `opts` and `out` must be valid.
enum DcnmfStatus dcnmf_fit_minvol(const struct DcnmfMatrix *v,
                                  size_t rank,
                                  double lambda,
                                  double delta,
                                  const struct DcnmfOptions *opts,
                                  struct DcnmfFit **out);

// KL fit with an ℓ1 penalty of weight `lambda` on every row of H and columns of W
// on the sphere of squared radius `rho`.
//
// # Safety
// `v`, `opts` and `out` must be valid.
enum DcnmfStatus dcnmf_fit_sparse_sphere(const struct DcnmfMatrix *v,
                                         size_t rank,
                                         double lambda,
                                         double rho,
                                         const struct DcnmfOptions *opts,
                                         struct DcnmfFit **out);

// # Safety
// `fit` must be NULL or a handle from this library not yet freed.
void dcnmf_fit_free(struct DcnmfFit *fit);

// Borrowed view of W, valid while `fit` lives.
//
// # Safety
// `fit` must be valid.
const struct DcnmfMatrix *dcnmf_fit_w(const struct DcnmfFit *fit);

// Borrowed view of H, valid while `fit` lives.
//
// # Safety
// `fit` must be valid.
const struct DcnmfMatrix *dcnmf_fit_h(const struct DcnmfFit *fit);

// Number of recorded trace rows, including the starting point.
//
// # Safety
// `fit` must be valid.
size_t dcnmf_fit_trace_len(const struct DcnmfFit *fit);

// Objective at trace row `index`, or NaN when out of range.
//
// # Safety
// `fit` must be valid.
double dcnmf_fit_objective(const struct DcnmfFit *fit, size_t index);

// Largest constraint residual over the trace.
//
// # Safety
// `fit` must be valid.
double dcnmf_fit_max_residual(const struct DcnmfFit *fit);

// Count of sphere updates that fell back to rescaling.
//
// # Safety
// `fit` must be valid.
size_t dcnmf_fit_fallbacks(const struct DcnmfFit *fit);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DCNMF_H */
