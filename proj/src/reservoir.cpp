#include "pde_embed/reservoir.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace pde_embed {

namespace {

constexpr double kMdToM2 = 9.869233e-16;
constexpr double kCpToPaS = 1e-3;
constexpr double kBarToPa = 1e5;
constexpr double kDayToS = 86400.0;

/// SPD 5-point system over an nx-by-ny cell grid. tx couples (ix,iy) with
/// (ix+1,iy), ty couples (ix,iy) with (ix,iy+1); diag carries storage plus
/// every face coupling including the Dirichlet half cells.
struct Stencil {
  int nx = 0, ny = 0;
  std::vector<double> diag, tx, ty;

  void matvec(const std::vector<double>& x, std::vector<double>& y) const {
    const int w = nx, h = ny;
    for (int iy = 0; iy < h; ++iy)
      for (int ix = 0; ix < w; ++ix) {
        const int i = iy * w + ix;
        double v = diag[i] * x[i];
        if (ix > 0) v -= tx[iy * (w - 1) + ix - 1] * x[i - 1];
        if (ix < w - 1) v -= tx[iy * (w - 1) + ix] * x[i + 1];
        if (iy > 0) v -= ty[(iy - 1) * w + ix] * x[i - w];
        if (iy < h - 1) v -= ty[iy * w + ix] * x[i + w];
        y[i] = v;
      }
  }
};

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// Jacobi-preconditioned CG. Returns iterations used, or -1 if the relative
/// residual never reached rel_tol.
int pcg(const Stencil& A, const std::vector<double>& b, std::vector<double>& x, double rel_tol,
        int max_iter) {
  const std::size_t n = b.size();
  std::vector<double> r(n), z(n), p(n), ap(n);
  A.matvec(x, ap);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ap[i];
  const double bnorm = std::sqrt(dot(b, b));
  if (bnorm == 0) {
    std::fill(x.begin(), x.end(), 0.0);
    return 0;
  }
  if (std::sqrt(dot(r, r)) <= rel_tol * bnorm) return 0;
  for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / A.diag[i];
  p = z;
  double rz = dot(r, z);
  for (int it = 1; it <= max_iter; ++it) {
    A.matvec(p, ap);
    const double alpha = rz / dot(p, ap);
    for (std::size_t i = 0; i < n; ++i) x[i] += alpha * p[i];
    for (std::size_t i = 0; i < n; ++i) r[i] -= alpha * ap[i];
    if (std::sqrt(dot(r, r)) <= rel_tol * bnorm) return it;
    for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / A.diag[i];
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  return -1;
}

double harmonic(double a, double b) { return 2.0 * a * b / (a + b); }

/// Backward-Euler system for one step: storage on the diagonal, harmonic-mean
/// face transmissibilities of `mob`, half-cell Dirichlet columns left/right,
/// no-flow top and bottom.
void assemble(int nx, int ny, double dx, double dy, const std::vector<double>& mob,
              const std::vector<double>& stor, const std::vector<double>& prev, double p_left,
              double p_right, Stencil& A, std::vector<double>& b) {
  A.nx = nx;
  A.ny = ny;
  A.diag.assign(std::size_t(nx) * ny, 0.0);
  A.tx.assign(std::size_t(nx - 1) * ny, 0.0);
  A.ty.assign(std::size_t(nx) * std::max(0, ny - 1), 0.0);
  b.assign(std::size_t(nx) * ny, 0.0);

  for (int iy = 0; iy < ny; ++iy)
    for (int ix = 0; ix + 1 < nx; ++ix) {
      const int i = iy * nx + ix;
      const double t = harmonic(mob[i], mob[i + 1]) * dy / dx;
      A.tx[iy * (nx - 1) + ix] = t;
      A.diag[i] += t;
      A.diag[i + 1] += t;
    }
  for (int iy = 0; iy + 1 < ny; ++iy)
    for (int ix = 0; ix < nx; ++ix) {
      const int i = iy * nx + ix;
      const double t = harmonic(mob[i], mob[i + nx]) * dx / dy;
      A.ty[iy * nx + ix] = t;
      A.diag[i] += t;
      A.diag[i + nx] += t;
    }
  for (std::size_t i = 0; i < A.diag.size(); ++i) {
    A.diag[i] += stor[i];
    b[i] = stor[i] * prev[i];
  }
  for (int iy = 0; iy < ny; ++iy) {
    const int il = iy * nx;
    const int ir = iy * nx + nx - 1;
    const double tl = 2.0 * mob[il] * dy / dx;
    const double tr = 2.0 * mob[ir] * dy / dx;
    A.diag[il] += tl;
    b[il] += tl * p_left;
    A.diag[ir] += tr;
    b[ir] += tr * p_right;
  }
}

void require_static_positive(const GridField& k) {
  k.validate();
  if (k.nt != 1) throw std::invalid_argument("coefficient field must be static");
  if (k.nx < 2) throw std::invalid_argument("need at least two cells along x");
  for (double v : k.values)
    if (!(v > 0)) throw std::invalid_argument("coefficient field must be positive");
}

} // namespace

void ReservoirParams::validate() const {
  const double pos[] = {porosity,  compressibility, viscosibility, p_ref,  b_ref,
                        mu_ref,    p_left,          p_right,       p_init, dt_days};
  for (double v : pos)
    if (!(v > 0) || !std::isfinite(v))
      throw std::invalid_argument("reservoir parameters must be positive and finite");
  if (steps < 1) throw std::invalid_argument("step count must be at least 1");
}

double ReservoirParams::formation_volume_factor(double p_bar) const {
  return b_ref * std::exp(-compressibility * (p_bar - p_ref));
}

double ReservoirParams::viscosity_cp(double p_bar) const {
  return mu_ref * std::exp(viscosibility * (p_bar - p_ref));
}

GridField solve_reservoir(const GridField& k_md, const ReservoirParams& prm) {
  prm.validate();
  require_static_positive(k_md);

  const int nx = k_md.nx, ny = k_md.ny, n = nx * ny;
  const double dx = k_md.dx, dy = k_md.dy; // meters, unit thickness
  const double vol = dx * dy;
  const double dt_s = prm.dt_days * kDayToS;
  const double c_pa = prm.compressibility / kBarToPa;

  std::vector<double> k_si(n);
  for (int i = 0; i < n; ++i) k_si[i] = k_md.values[i] * kMdToM2;

  GridField out = GridField::make(nx, ny, prm.steps + 1);
  out.x0 = k_md.x0;
  out.y0 = k_md.y0;
  out.dx = dx;
  out.dy = dy;
  out.t0 = 0.0;
  out.dt = prm.dt_days; // time axis in days

  std::vector<double> p(n, prm.p_init * kBarToPa);
  for (int i = 0; i < n; ++i) out.values[i] = prm.p_init;

  const double pl = prm.p_left * kBarToPa;
  const double pr = prm.p_right * kBarToPa;

  Stencil A;
  std::vector<double> b, mob(n), stor(n), pnew(n);

  for (int step = 1; step <= prm.steps; ++step) {
    const std::vector<double> pn = p;
    bool converged = false;
    for (int it = 0; it < 50 && !converged; ++it) {
      for (int i = 0; i < n; ++i) {
        const double pbar = p[i] / kBarToPa;
        const double bfac = prm.formation_volume_factor(pbar);
        const double mu = prm.viscosity_cp(pbar) * kCpToPaS;
        mob[i] = k_si[i] / (bfac * mu);
        stor[i] = vol * prm.porosity * c_pa / (bfac * dt_s);
      }
      assemble(nx, ny, dx, dy, mob, stor, pn, pl, pr, A, b);
      pnew = p; // warm start
      if (pcg(A, b, pnew, 1e-10, std::max(1000, 4 * n)) < 0)
        throw SolverError(SolverError::Kind::LinearSolveFailure, step,
                          "pressure solve missed its tolerance at step " + std::to_string(step));
      double dn = 0, xn = 0;
      for (int i = 0; i < n; ++i) {
        const double d = pnew[i] - p[i];
        dn += d * d;
        xn += pnew[i] * pnew[i];
      }
      p = pnew;
      converged = std::sqrt(dn) <= 1e-8 * (std::sqrt(xn) + 1e-300);
    }
    if (!converged)
      throw SolverError(SolverError::Kind::PicardNonConvergence, step,
                        "property iteration stalled at step " + std::to_string(step));
    for (int i = 0; i < n; ++i) out.values[std::size_t(step) * n + i] = p[i] / kBarToPa;
  }
  return out;
}

GridField solve_groundwater(const GridField& k_field, double specific_storage, int steps,
                            double dt_days, double h_left, double h_right) {
  require_static_positive(k_field);
  if (!(specific_storage > 0)) throw std::invalid_argument("specific storage must be positive");
  if (steps < 1) throw std::invalid_argument("step count must be at least 1");
  if (!(dt_days > 0)) throw std::invalid_argument("time step must be positive");

  const int nx = k_field.nx, ny = k_field.ny, n = nx * ny;
  const double dx = k_field.dx, dy = k_field.dy;
  const double vol = dx * dy;

  GridField out = GridField::make(nx, ny, steps + 1);
  out.x0 = k_field.x0;
  out.y0 = k_field.y0;
  out.dx = dx;
  out.dy = dy;
  out.t0 = 0.0;
  out.dt = dt_days;

  // Cells start at the right-boundary head; the elevated left head enters
  // through the Dirichlet half cell (no cell center sits on the boundary).
  std::vector<double> h(n, h_right), hnew(n), b;
  std::vector<double> stor(n, specific_storage * vol / dt_days);
  for (int i = 0; i < n; ++i) out.values[i] = h_right;

  Stencil A;
  // Tight inner tolerance: the late-time head profile should reproduce the
  // exact discrete steady state to ~1e-8.
  for (int step = 1; step <= steps; ++step) {
    assemble(nx, ny, dx, dy, k_field.values, stor, h, h_left, h_right, A, b);
    hnew = h;
    if (pcg(A, b, hnew, 1e-13, std::max(1000, 4 * n)) < 0)
      throw SolverError(SolverError::Kind::LinearSolveFailure, step,
                        "head solve missed its tolerance at step " + std::to_string(step));
    h = hnew;
    for (int i = 0; i < n; ++i) out.values[std::size_t(step) * n + i] = h[i];
  }
  return out;
}

} // namespace pde_embed
