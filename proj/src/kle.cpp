#include "pde_embed/kle.hpp"

#include <algorithm>
#include <cmath>

#include "pde_embed/rng.hpp"

namespace pde_embed {

namespace {

// Roots of the eigenvalue conditions for exp(-c|x1-x2|) on [-a, a], written in
// theta = w*a. Both forms are free of the tan singularities, and each bracket
// (even: (k pi, k pi + pi/2), odd: (k pi + pi/2, (k+1) pi)) has opposite
// endpoint signs, so plain bisection is safe.
double even_condition(double theta, double a, double c) {
  return c * std::cos(theta) - (theta / a) * std::sin(theta);
}

double odd_condition(double theta, double a, double c) {
  return (theta / a) * std::cos(theta) + c * std::sin(theta);
}

double bisect(double lo, double hi, double a, double c, bool even_mode) {
  auto h = [&](double th) { return even_mode ? even_condition(th, a, c) : odd_condition(th, a, c); };
  double flo = h(lo), fhi = h(hi);
  if (!(flo * fhi < 0))
    throw KleError(KleError::Kind::RootBracketingFailed,
                   "eigenvalue condition does not change sign on the bracket");
  for (int it = 0; it < 200 && hi - lo > 1e-12 * (1.0 + hi); ++it) {
    double mid = 0.5 * (lo + hi);
    double fm = h(mid);
    if (fm == 0) return mid;
    if (flo * fm < 0) {
      hi = mid;
    } else {
      lo = mid;
      flo = fm;
    }
  }
  return 0.5 * (lo + hi);
}

constexpr double kPi = 3.141592653589793;

} // namespace

Kle1d kle_eigenpairs_1d(double eta, double length, int n_modes) {
  if (!(eta > 0) || !(length > 0))
    throw KleError(KleError::Kind::BadSpec, "eta and length must be positive");
  if (n_modes < 1) throw KleError(KleError::Kind::BadSpec, "need at least one mode");
  Kle1d out;
  out.length = length;
  out.eta = eta;
  const double a = 0.5 * length;
  const double c = 1.0 / eta;
  out.lambda.reserve(n_modes);
  out.omega.reserve(n_modes);
  out.even.reserve(n_modes);
  for (int m = 0; m < n_modes; ++m) {
    const int k = m / 2;
    const bool even_mode = (m % 2 == 0);
    const double lo = even_mode ? k * kPi : k * kPi + 0.5 * kPi;
    const double hi = even_mode ? k * kPi + 0.5 * kPi : (k + 1) * kPi;
    const double theta = bisect(lo, hi, a, c, even_mode);
    const double w = theta / a;
    out.omega.push_back(w);
    out.lambda.push_back(2 * c / (w * w + c * c));
    out.even.push_back(even_mode ? 1 : 0);
  }
  return out;
}

double Kle1d::eigenfunction(int mode, double x) const {
  const double a = 0.5 * length;
  const double w = omega.at(mode);
  const double xc = x - a; // center the domain
  const double s2 = std::sin(2 * w * a) / (2 * w);
  if (even[mode]) return std::cos(w * xc) / std::sqrt(a + s2);
  return std::sin(w * xc) / std::sqrt(a - s2);
}

void KleSpec::validate() const {
  if (!(variance > 0)) throw KleError(KleError::Kind::BadSpec, "variance must be positive");
  if (!(eta_x > 0) || !(eta_y > 0))
    throw KleError(KleError::Kind::BadSpec, "correlation lengths must be positive");
  if (trunc < 1) throw KleError(KleError::Kind::BadSpec, "truncation must be at least 1");
  if (!(length_x > 0) || !(length_y > 0))
    throw KleError(KleError::Kind::BadSpec, "domain lengths must be positive");
  if (!std::isfinite(mean_ln)) throw KleError(KleError::Kind::BadSpec, "mean must be finite");
}

std::vector<KleMode2d> kle_modes_2d(const Kle1d& kx, const Kle1d& ky, double variance, int trunc) {
  // Any product in the global top-trunc has both factor indices < trunc, since
  // each (i', j') <= (i, j) componentwise yields a product at least as large.
  // Requiring trunc modes per axis therefore makes the selection exact.
  if (trunc < 1) throw KleError(KleError::Kind::BadSpec, "truncation must be at least 1");
  if (kx.modes() < trunc || ky.modes() < trunc)
    throw KleError(KleError::Kind::BadSpec, "need trunc 1D modes per axis");
  std::vector<KleMode2d> all;
  all.reserve(size_t(trunc) * trunc);
  for (int i = 0; i < trunc; ++i)
    for (int j = 0; j < trunc; ++j)
      all.push_back({i, j, variance * kx.lambda[i] * ky.lambda[j]});
  std::sort(all.begin(), all.end(), [](const KleMode2d& p, const KleMode2d& q) {
    if (p.lambda != q.lambda) return p.lambda > q.lambda;
    if (p.ix != q.ix) return p.ix < q.ix;
    return p.iy < q.iy;
  });
  all.resize(trunc);
  return all;
}

GridField kle_realize(const KleSpec& spec, int nx, int ny, const std::vector<double>& xi) {
  spec.validate();
  if (nx < 1 || ny < 1) throw KleError(KleError::Kind::BadSpec, "grid dims must be positive");
  if (int(xi.size()) != spec.trunc)
    throw KleError(KleError::Kind::BadSpec, "xi length must equal the truncation");

  const Kle1d kx = kle_eigenpairs_1d(spec.eta_x, spec.length_x, spec.trunc);
  const Kle1d ky = kle_eigenpairs_1d(spec.eta_y, spec.length_y, spec.trunc);
  const std::vector<KleMode2d> modes = kle_modes_2d(kx, ky, spec.variance, spec.trunc);

  GridField f = GridField::make(nx, ny, 1);
  f.dx = spec.length_x / nx;
  f.dy = spec.length_y / ny;
  f.x0 = 0.5 * f.dx; // cell centers
  f.y0 = 0.5 * f.dy;
  f.dt = 1.0;
  f.t0 = 0.0;

  // Tabulate the 1D eigenfunctions once per axis.
  std::vector<double> fx(size_t(spec.trunc) * nx), fy(size_t(spec.trunc) * ny);
  for (int m = 0; m < spec.trunc; ++m) {
    for (int i = 0; i < nx; ++i) fx[size_t(m) * nx + i] = kx.eigenfunction(m, f.x(i));
    for (int j = 0; j < ny; ++j) fy[size_t(m) * ny + j] = ky.eigenfunction(m, f.y(j));
  }

  std::fill(f.values.begin(), f.values.end(), spec.mean_ln);
  for (size_t m = 0; m < modes.size(); ++m) {
    const KleMode2d& md = modes[m];
    const double amp = std::sqrt(md.lambda) * xi[m];
    for (int j = 0; j < ny; ++j) {
      const double gy = amp * fy[size_t(md.iy) * ny + j];
      for (int i = 0; i < nx; ++i) f.at(i, j, 0) += gy * fx[size_t(md.ix) * nx + i];
    }
  }
  return f;
}

GridField kle_realize(const KleSpec& spec, int nx, int ny, uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  std::vector<double> xi(spec.trunc);
  for (double& v : xi) v = rng.normal();
  return kle_realize(spec, nx, ny, xi);
}

} // namespace pde_embed
