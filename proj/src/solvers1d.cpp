#include "pde_embed/solvers1d.hpp"

#include <cmath>
#include <complex>
#include <vector>

namespace pde_embed {

namespace {

constexpr double kPi = 3.141592653589793;

/// Solve a tridiagonal system in place. diag/rhs are overwritten; lower[i]
/// multiplies x[i-1], upper[i] multiplies x[i+1].
void thomas_solve(std::vector<double>& lower, std::vector<double>& diag,
                  std::vector<double>& upper, std::vector<double>& rhs, std::vector<double>& x) {
  const std::size_t n = diag.size();
  for (std::size_t i = 1; i < n; ++i) {
    const double m = lower[i] / diag[i - 1];
    diag[i] -= m * upper[i - 1];
    rhs[i] -= m * rhs[i - 1];
  }
  x[n - 1] = rhs[n - 1] / diag[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) x[i] = (rhs[i] - upper[i] * x[i + 1]) / diag[i];
}

void require_grid(int nx, int nt, int min_nx) {
  if (nx < min_nx || nt < 2)
    throw SolverError(SolverError::Kind::BadGrid, -1, "grid is too small");
}

bool all_finite(const std::vector<double>& v) {
  for (double u : v)
    if (!std::isfinite(u)) return false;
  return true;
}

} // namespace

GridField solve_vgc(int nx, int nt) {
  require_grid(nx, nt, 3);
  GridField f = GridField::make(nx, 1, nt);
  f.x0 = 1.0;
  f.dx = 1.0 / (nx - 1);
  f.t0 = 0.0;
  f.dt = 0.5 / (nt - 1);

  for (int i = 1; i < nx - 1; ++i) f.at(i, 0, 0) = -std::sin(kPi * f.x(i));
  // Dirichlet values win at the corners; -sin(pi x) is zero there analytically.
  f.at(0, 0, 0) = 0.0;
  f.at(nx - 1, 0, 0) = 0.0;

  const int m = nx - 2; // interior unknowns
  const double r = f.dt / (f.dx * f.dx);
  std::vector<double> un(nx), v(nx), w(nx, 0.0);
  std::vector<double> lo(m), di(m), up(m), rhs(m), sol(m);

  for (int step = 1; step < nt; ++step) {
    for (int i = 0; i < nx; ++i) un[i] = f.at(i, 0, step - 1);
    v = un;
    bool converged = false;
    for (int it = 0; it < 100; ++it) {
      // face coefficient (v_i + v_{i+1})/2 freezes the flux nonlinearity
      for (int i = 0; i < m; ++i) {
        const int g = i + 1;
        const double cw = 0.5 * (v[g - 1] + v[g]);
        const double ce = 0.5 * (v[g] + v[g + 1]);
        lo[i] = -r * cw;
        up[i] = -r * ce;
        di[i] = 1.0 + r * (cw + ce);
        rhs[i] = un[g];
      }
      thomas_solve(lo, di, up, rhs, sol);
      w[0] = 0.0;
      w[nx - 1] = 0.0;
      for (int i = 0; i < m; ++i) w[i + 1] = sol[i];

      double dn = 0, wn = 0;
      for (int i = 0; i < nx; ++i) {
        const double d = w[i] - v[i];
        dn += d * d;
        wn += w[i] * w[i];
      }
      v = w;
      if (std::sqrt(dn) <= 1e-10 * (std::sqrt(wn) + 1e-300)) {
        converged = true;
        break;
      }
    }
    if (!converged || !all_finite(v))
      throw SolverError(SolverError::Kind::NonConvergence, step,
                        "Picard iteration stalled at step " + std::to_string(step));
    for (int i = 0; i < nx; ++i) f.at(i, 0, step) = v[i];
  }
  return f;
}

GridField solve_reaction_diffusion(double nu, double rho, int nx, int nt,
                                   const std::function<double(double)>& initial) {
  if (!(nu > 0)) throw SolverError(SolverError::Kind::BadGrid, -1, "nu must be positive");
  require_grid(nx, nt, 3);
  GridField f = GridField::make(nx, 1, nt);
  f.x0 = 1.0;
  f.dx = 1.0 / (nx - 1);
  f.t0 = 0.0;
  f.dt = 0.5 / (nt - 1);

  for (int i = 1; i < nx - 1; ++i) {
    const double x = f.x(i);
    f.at(i, 0, 0) = initial ? initial(x) : -std::sin(kPi * x);
  }
  f.at(0, 0, 0) = 0.0;
  f.at(nx - 1, 0, 0) = 0.0;

  const int m = nx - 2;
  const double r = 0.5 * nu * f.dt / (f.dx * f.dx);
  std::vector<double> u(nx), lo(m), di(m), up(m), rhs(m), sol(m);

  for (int step = 1; step < nt; ++step) {
    for (int i = 0; i < nx; ++i) u[i] = f.at(i, 0, step - 1);
    for (int i = 0; i < m; ++i) {
      const int g = i + 1;
      lo[i] = -r;
      up[i] = -r;
      di[i] = 1.0 + 2.0 * r;
      rhs[i] = u[g] + r * (u[g + 1] - 2.0 * u[g] + u[g - 1]) +
               f.dt * rho * u[g] * (1.0 - u[g]);
    }
    thomas_solve(lo, di, up, rhs, sol);
    f.at(0, 0, step) = 0.0;
    f.at(nx - 1, 0, step) = 0.0;
    for (int i = 0; i < m; ++i) f.at(i + 1, 0, step) = sol[i];
    for (int i = 0; i < m; ++i)
      if (!std::isfinite(sol[i]))
        throw SolverError(SolverError::Kind::NonConvergence, step,
                          "reaction step blew up at step " + std::to_string(step));
  }
  return f;
}

namespace {

/// Iterative radix-2 complex FFT with precomputed twiddles.
class Fft {
public:
  explicit Fft(std::size_t n) : n_(n) {
    if (n < 2 || (n & (n - 1)) != 0)
      throw SolverError(SolverError::Kind::BadGrid, -1, "FFT size must be a power of two");
    rev_.resize(n);
    rev_[0] = 0;
    for (std::size_t i = 1, j = 0; i < n; ++i) {
      std::size_t bit = n >> 1;
      for (; j & bit; bit >>= 1) j ^= bit;
      j ^= bit;
      rev_[i] = j;
    }
    tw_.reserve(n - 1);
    for (std::size_t len = 2; len <= n; len <<= 1)
      for (std::size_t j = 0; j < len / 2; ++j)
        tw_.push_back(std::polar(1.0, -2.0 * kPi * double(j) / double(len)));
  }

  void forward(std::complex<double>* a) const { run(a, false); }

  void inverse(std::complex<double>* a) const {
    run(a, true);
    const double s = 1.0 / double(n_);
    for (std::size_t i = 0; i < n_; ++i) a[i] *= s;
  }

private:
  void run(std::complex<double>* a, bool inv) const {
    for (std::size_t i = 0; i < n_; ++i)
      if (i < rev_[i]) std::swap(a[i], a[rev_[i]]);
    std::size_t base = 0;
    for (std::size_t len = 2; len <= n_; len <<= 1) {
      const std::size_t half = len / 2;
      for (std::size_t i = 0; i < n_; i += len)
        for (std::size_t j = 0; j < half; ++j) {
          std::complex<double> w = tw_[base + j];
          if (inv) w = std::conj(w);
          const std::complex<double> u = a[i + j];
          const std::complex<double> v = a[i + j + half] * w;
          a[i + j] = u + v;
          a[i + j + half] = u - v;
        }
      base += half;
    }
  }

  std::size_t n_;
  std::vector<std::size_t> rev_;
  std::vector<std::complex<double>> tw_;
};

} // namespace

GridField solve_kdv(int nx, int nt, double dt_internal) {
  require_grid(nx, nt, 8);
  if (!(dt_internal > 0) || dt_internal > 1e-5)
    throw SolverError(SolverError::Kind::BadGrid, -1,
                      "internal step must be positive and at most 1e-5");
  const Fft fft{std::size_t(nx)};

  GridField f = GridField::make(nx, 1, nt);
  f.x0 = -1.0;
  f.dx = 2.0 / nx; // periodic: right endpoint excluded
  f.t0 = 0.0;
  f.dt = 1.0 / (nt - 1);

  const int spf = std::max(1, int(std::ceil(f.dt / dt_internal - 1e-12)));
  const double dt = f.dt / spf;

  using C = std::complex<double>;
  const std::size_t n = std::size_t(nx);
  std::vector<double> k(n), k3(n);
  std::vector<char> keep(n);
  for (std::size_t j = 0; j < n; ++j) {
    const int m = int(j) <= nx / 2 - 1 ? int(j) : int(j) - nx;
    k[j] = kPi * m;
    k3[j] = k[j] * k[j] * k[j];
    keep[j] = std::abs(m) <= nx / 3 ? 1 : 0; // 2/3 dealiasing
  }

  std::vector<C> uh(n), us(n), rhs1(n), rhs2(n), rhs3(n), rhs4(n), buf(n), bux(n);
  const double b = 0.0025;

  auto rhs = [&](const std::vector<C>& in, std::vector<C>& out) {
    buf = in;
    fft.inverse(buf.data()); // physical u
    for (std::size_t j = 0; j < n; ++j) bux[j] = C(0, k[j]) * in[j];
    fft.inverse(bux.data()); // physical u_x
    for (std::size_t j = 0; j < n; ++j)
      out[j] = C(buf[j].real() * bux[j].real(), 0.0); // u u_x, imag discarded
    fft.forward(out.data());
    for (std::size_t j = 0; j < n; ++j) {
      if (!keep[j]) out[j] = C(0, 0);
      out[j] = -out[j] + C(0, b * k3[j]) * in[j]; // -fft(u u_x) - b (ik)^3 uh
    }
  };

  for (int i = 0; i < nx; ++i) {
    f.at(i, 0, 0) = std::cos(kPi * f.x(i));
    uh[std::size_t(i)] = C(f.at(i, 0, 0), 0.0);
  }
  fft.forward(uh.data());
  for (std::size_t j = 0; j < n; ++j)
    if (!keep[j]) uh[j] = C(0, 0);

  long global_step = 0;
  for (int frame = 1; frame < nt; ++frame) {
    for (int s = 0; s < spf; ++s, ++global_step) {
      rhs(uh, rhs1);
      for (std::size_t j = 0; j < n; ++j) us[j] = uh[j] + 0.5 * dt * rhs1[j];
      rhs(us, rhs2);
      for (std::size_t j = 0; j < n; ++j) us[j] = uh[j] + 0.5 * dt * rhs2[j];
      rhs(us, rhs3);
      for (std::size_t j = 0; j < n; ++j) us[j] = uh[j] + dt * rhs3[j];
      rhs(us, rhs4);
      for (std::size_t j = 0; j < n; ++j)
        uh[j] += (dt / 6.0) * (rhs1[j] + 2.0 * rhs2[j] + 2.0 * rhs3[j] + rhs4[j]);
    }
    buf = uh;
    fft.inverse(buf.data());
    for (int i = 0; i < nx; ++i) {
      const double v = buf[std::size_t(i)].real();
      if (!std::isfinite(v))
        throw SolverError(SolverError::Kind::Instability, frame,
                          "spectral state went non-finite after " + std::to_string(global_step) +
                              " internal steps");
      f.at(i, 0, frame) = v;
    }
  }
  return f;
}

} // namespace pde_embed
