#pragma once

#include <cstddef>

// Batched numeric kernels behind graph evaluation and network propagation.
//
// The production kernels are OpenMP-parallel. Determinism contract: every
// output slot is computed by exactly one thread with a fixed-order inner
// loop, and reductions combine fixed-size block partials serially, so
// results are bitwise identical for any thread count (including one).
//
// kernels::serial holds naive single-loop reference implementations kept
// for testing and benchmarking. Their summation order differs from the
// unrolled production dot product, so tests compare them at tight relative
// tolerance rather than bitwise.

namespace pde_embed::kernels {

bool parallel_enabled();
void set_parallel(bool on);

namespace detail {
/// Fixed-order 4-accumulator dot product shared by all production kernels.
inline double dot(const double* __restrict a, const double* __restrict b, int n) {
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}
} // namespace detail

// Dense layer propagation. W is rows x inner, row-major. H and Z are
// column-major panels: H is inner x cols, Z is rows x cols. A panel column
// holds the jet coefficients of one batch element when ncoeff > 1; the bias
// enters only the value coefficient (columns with col % ncoeff == 0).

/// Z = W * H, plus bias on value columns (bias may be null).
void affine_forward(const double* W, const double* bias, const double* H, double* Z,
                    int rows, int inner, int cols, int ncoeff);

/// Hbar = W^T * Zbar. wt_scratch must hold rows*inner doubles.
void affine_backward_data(const double* W, const double* Zbar, double* Hbar,
                          int rows, int inner, int cols, double* wt_scratch);

/// Wbar += Zbar * H^T and bbar += row sums of Zbar over value columns.
/// bbar may be null.
void affine_backward_param(const double* Zbar, const double* H, double* Wbar, double* bbar,
                           int rows, int inner, int cols, int ncoeff);

// Elementwise array ops used by compute-graph evaluation.
void ew_add(const double* a, const double* b, double* o, int n);
void ew_sub(const double* a, const double* b, double* o, int n);
void ew_mul(const double* a, const double* b, double* o, int n);
void ew_div(const double* a, const double* b, double* o, int n);
void ew_neg(const double* a, double* o, int n);
void ew_exp(const double* a, double* o, int n);
void ew_sin(const double* a, double* o, int n);
void ew_cos(const double* a, double* o, int n);
void ew_log(const double* a, double* o, int n);
void ew_pow(const double* a, double expo, double* o, int n);

/// Index of the first non-finite entry, or -1.
int first_nonfinite(const double* a, int n);

/// Deterministic blocked sums: fixed 1024-element block partials combined
/// serially in block order, independent of threading.
double block_sum(const double* a, int n);
double block_sum_sq(const double* a, int n);

namespace serial {
void affine_forward(const double* W, const double* bias, const double* H, double* Z,
                    int rows, int inner, int cols, int ncoeff);
void affine_backward_data(const double* W, const double* Zbar, double* Hbar,
                          int rows, int inner, int cols);
void affine_backward_param(const double* Zbar, const double* H, double* Wbar, double* bbar,
                           int rows, int inner, int cols, int ncoeff);
double sum(const double* a, int n);
double sum_sq(const double* a, int n);
} // namespace serial

} // namespace pde_embed::kernels
