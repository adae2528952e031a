#include "pde_embed/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <vector>

namespace pde_embed::kernels {

namespace {
std::atomic<bool> g_parallel{true};
} // namespace

bool parallel_enabled() { return g_parallel.load(std::memory_order_relaxed); }
void set_parallel(bool on) { g_parallel.store(on, std::memory_order_relaxed); }

void affine_forward(const double* W, const double* bias, const double* H, double* Z,
                    int rows, int inner, int cols, int ncoeff) {
  const bool par = parallel_enabled();
#pragma omp parallel for schedule(static) if (par)
  for (int col = 0; col < cols; ++col) {
    const double* h = H + size_t(col) * inner;
    double* z = Z + size_t(col) * rows;
    const bool value_col = bias && (col % ncoeff == 0);
    for (int i = 0; i < rows; ++i) {
      double s = detail::dot(W + size_t(i) * inner, h, inner);
      z[i] = value_col ? s + bias[i] : s;
    }
  }
}

void affine_backward_data(const double* W, const double* Zbar, double* Hbar,
                          int rows, int inner, int cols, double* wt_scratch) {
  for (int i = 0; i < rows; ++i)
    for (int k = 0; k < inner; ++k)
      wt_scratch[size_t(k) * rows + i] = W[size_t(i) * inner + k];
  const bool par = parallel_enabled();
#pragma omp parallel for schedule(static) if (par)
  for (int col = 0; col < cols; ++col) {
    const double* zb = Zbar + size_t(col) * rows;
    double* hb = Hbar + size_t(col) * inner;
    for (int k = 0; k < inner; ++k)
      hb[k] = detail::dot(wt_scratch + size_t(k) * rows, zb, rows);
  }
}

void affine_backward_param(const double* Zbar, const double* H, double* Wbar, double* bbar,
                           int rows, int inner, int cols, int ncoeff) {
  const bool par = parallel_enabled();
#pragma omp parallel for schedule(static) if (par)
  for (int i = 0; i < rows; ++i) {
    double* wrow = Wbar + size_t(i) * inner;
    double bacc = 0;
    for (int col = 0; col < cols; ++col) {
      double z = Zbar[size_t(col) * rows + i];
      const double* hcol = H + size_t(col) * inner;
      for (int k = 0; k < inner; ++k) wrow[k] += z * hcol[k];
      if (bbar && col % ncoeff == 0) bacc += z;
    }
    if (bbar) bbar[i] += bacc;
  }
}

#define PDE_EMBED_EW(name, expr)                                       \
  void name(const double* a, const double* b, double* o, int n) {      \
    const bool par = parallel_enabled() && n >= 4096;                  \
    _Pragma("omp parallel for schedule(static) if (par)")              \
    for (int i = 0; i < n; ++i) o[i] = (expr);                         \
  }

PDE_EMBED_EW(ew_add, a[i] + b[i])
PDE_EMBED_EW(ew_sub, a[i] - b[i])
PDE_EMBED_EW(ew_mul, a[i] * b[i])
PDE_EMBED_EW(ew_div, a[i] / b[i])
#undef PDE_EMBED_EW

#define PDE_EMBED_EW1(name, expr)                                      \
  void name(const double* a, double* o, int n) {                       \
    const bool par = parallel_enabled() && n >= 4096;                  \
    _Pragma("omp parallel for schedule(static) if (par)")              \
    for (int i = 0; i < n; ++i) o[i] = (expr);                         \
  }

PDE_EMBED_EW1(ew_neg, -a[i])
PDE_EMBED_EW1(ew_exp, std::exp(a[i]))
PDE_EMBED_EW1(ew_sin, std::sin(a[i]))
PDE_EMBED_EW1(ew_cos, std::cos(a[i]))
PDE_EMBED_EW1(ew_log, std::log(a[i]))
#undef PDE_EMBED_EW1

void ew_pow(const double* a, double expo, double* o, int n) {
  const bool par = parallel_enabled() && n >= 4096;
#pragma omp parallel for schedule(static) if (par)
  for (int i = 0; i < n; ++i) o[i] = std::pow(a[i], expo);
}

int first_nonfinite(const double* a, int n) {
  for (int i = 0; i < n; ++i)
    if (!std::isfinite(a[i])) return i;
  return -1;
}

namespace {
constexpr int kBlock = 1024;

template <class F>
double blocked_reduce(const double* a, int n, F block_partial) {
  int nblocks = (n + kBlock - 1) / kBlock;
  if (nblocks <= 1) return block_partial(a, n);
  double partials[64];
  double* p = partials;
  std::vector<double> heap;
  if (nblocks > 64) {
    heap.resize(size_t(nblocks));
    p = heap.data();
  }
  const bool par = parallel_enabled();
#pragma omp parallel for schedule(static) if (par)
  for (int b = 0; b < nblocks; ++b) {
    int lo = b * kBlock;
    p[b] = block_partial(a + lo, std::min(kBlock, n - lo));
  }
  double s = 0;
  for (int b = 0; b < nblocks; ++b) s += p[b];
  return s;
}
} // namespace

double block_sum(const double* a, int n) {
  return blocked_reduce(a, n, [](const double* x, int m) {
    double s = 0;
    for (int i = 0; i < m; ++i) s += x[i];
    return s;
  });
}

double block_sum_sq(const double* a, int n) {
  return blocked_reduce(a, n, [](const double* x, int m) {
    double s = 0;
    for (int i = 0; i < m; ++i) s += x[i] * x[i];
    return s;
  });
}

namespace serial {

void affine_forward(const double* W, const double* bias, const double* H, double* Z,
                    int rows, int inner, int cols, int ncoeff) {
  for (int col = 0; col < cols; ++col)
    for (int i = 0; i < rows; ++i) {
      double s = 0;
      for (int k = 0; k < inner; ++k) s += W[size_t(i) * inner + k] * H[size_t(col) * inner + k];
      if (bias && col % ncoeff == 0) s += bias[i];
      Z[size_t(col) * rows + i] = s;
    }
}

void affine_backward_data(const double* W, const double* Zbar, double* Hbar,
                          int rows, int inner, int cols) {
  for (int col = 0; col < cols; ++col)
    for (int k = 0; k < inner; ++k) {
      double s = 0;
      for (int i = 0; i < rows; ++i) s += W[size_t(i) * inner + k] * Zbar[size_t(col) * rows + i];
      Hbar[size_t(col) * inner + k] = s;
    }
}

void affine_backward_param(const double* Zbar, const double* H, double* Wbar, double* bbar,
                           int rows, int inner, int cols, int ncoeff) {
  for (int i = 0; i < rows; ++i)
    for (int col = 0; col < cols; ++col) {
      double z = Zbar[size_t(col) * rows + i];
      for (int k = 0; k < inner; ++k) Wbar[size_t(i) * inner + k] += z * H[size_t(col) * inner + k];
      if (bbar && col % ncoeff == 0) bbar[i] += z;
    }
}

double sum(const double* a, int n) {
  double s = 0;
  for (int i = 0; i < n; ++i) s += a[i];
  return s;
}

double sum_sq(const double* a, int n) {
  double s = 0;
  for (int i = 0; i < n; ++i) s += a[i] * a[i];
  return s;
}

} // namespace serial

} // namespace pde_embed::kernels
