#include "pde_embed/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace pde_embed {

AdamState AdamState::for_bank(const NetworkBank& bank, double lr) {
  AdamState st;
  st.lr = lr;
  st.m.resize(bank.nets.size());
  st.v.resize(bank.nets.size());
  for (std::size_t i = 0; i < bank.nets.size(); ++i) {
    st.m[i].assign(bank.nets[i].params.flat.size(), 0.0);
    st.v[i].assign(bank.nets[i].params.flat.size(), 0.0);
  }
  return st;
}

void adam_step(AdamState& st, NetworkBank& bank, const std::vector<std::vector<double>>& grads) {
  if (st.m.size() != bank.nets.size() || grads.size() != bank.nets.size())
    throw std::invalid_argument("adam state does not match the bank");
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (grads[i].empty()) continue;
    if (grads[i].size() != bank.nets[i].params.flat.size())
      throw std::invalid_argument("gradient length does not match parameters");
    for (double g : grads[i])
      if (!std::isfinite(g))
        throw OptimizeError(OptimizeError::Kind::NonFiniteGradient,
                            "non-finite gradient for network '" + bank.nets[i].name + "'");
  }
  ++st.t;
  const double bc1 = 1.0 - std::pow(st.beta1, double(st.t));
  const double bc2 = 1.0 - std::pow(st.beta2, double(st.t));
  for (std::size_t i = 0; i < bank.nets.size(); ++i) {
    auto& p = bank.nets[i].params.flat;
    auto& m = st.m[i];
    auto& v = st.v[i];
    const double* g = grads[i].empty() ? nullptr : grads[i].data();
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double gj = g ? g[j] : 0.0;
      m[j] = st.beta1 * m[j] + (1.0 - st.beta1) * gj;
      v[j] = st.beta2 * v[j] + (1.0 - st.beta2) * gj * gj;
      p[j] -= st.lr * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + st.eps);
    }
  }
}

std::vector<double> gather_params(const NetworkBank& bank) {
  std::vector<double> out;
  for (const auto& e : bank.nets) out.insert(out.end(), e.params.flat.begin(), e.params.flat.end());
  return out;
}

void scatter_params(NetworkBank& bank, const std::vector<double>& flat) {
  std::size_t off = 0;
  for (auto& e : bank.nets) {
    if (off + e.params.flat.size() > flat.size())
      throw std::invalid_argument("flat parameter vector too short");
    std::copy(flat.begin() + long(off), flat.begin() + long(off + e.params.flat.size()),
              e.params.flat.begin());
    off += e.params.flat.size();
  }
  if (off != flat.size()) throw std::invalid_argument("flat parameter vector too long");
}

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

constexpr double kC1 = 1e-4;
constexpr double kC2 = 0.9;
constexpr double kGradTol = 1e-9;

struct Probe {
  double f = 0, df = 0; // phi(a) and phi'(a)
  bool finite = false;
};

} // namespace

LbfgsResult lbfgs_refine(std::vector<double> x0, const LossGradFn& fg, int iterations,
                         int memory) {
  const std::size_t n = x0.size();
  LbfgsResult res;
  res.x = std::move(x0);

  std::vector<double> g(n), xt(n), gt(n);
  double f = fg(res.x, g);
  res.loss = f;
  std::vector<double> best_x = res.x;
  double best_f = f;

  std::deque<std::vector<double>> ss, ys;
  std::deque<double> rho;

  auto probe = [&](const std::vector<double>& x, const std::vector<double>& d, double a,
                   Probe& out) {
    for (std::size_t i = 0; i < n; ++i) xt[i] = x[i] + a * d[i];
    out.f = fg(xt, gt);
    out.df = dot(gt, d);
    out.finite = std::isfinite(out.f) && std::isfinite(out.df);
    if (out.finite && out.f < best_f) {
      best_f = out.f;
      best_x = xt;
    }
  };

  for (int it = 0; it < iterations; ++it) {
    if (norm(g) < kGradTol) {
      res.converged = true;
      break;
    }

    // Two-loop recursion: d = -H g, seeded with gamma I.
    std::vector<double> d(g);
    std::vector<double> alpha(ss.size());
    for (std::size_t k = ss.size(); k-- > 0;) {
      alpha[k] = rho[k] * dot(ss[k], d);
      for (std::size_t i = 0; i < n; ++i) d[i] -= alpha[k] * ys[k][i];
    }
    if (!ss.empty()) {
      const double gamma = dot(ss.back(), ys.back()) / dot(ys.back(), ys.back());
      for (auto& v : d) v *= gamma;
    }
    for (std::size_t k = 0; k < ss.size(); ++k) {
      const double beta = rho[k] * dot(ys[k], d);
      for (std::size_t i = 0; i < n; ++i) d[i] += (alpha[k] - beta) * ss[k][i];
    }
    for (auto& v : d) v = -v;

    double dphi0 = dot(g, d);
    if (dphi0 >= 0) { // not a descent direction; fall back to steepest descent
      d = g;
      for (auto& v : d) v = -v;
      dphi0 = dot(g, d);
      ss.clear();
      ys.clear();
      rho.clear();
      if (dphi0 >= 0) {
        res.converged = true; // zero gradient
        break;
      }
    }

    // Strong-Wolfe search: bracket then zoom, interpolating by bisection.
    const double phi0 = f;
    double a_prev = 0, phi_prev = phi0;
    double a = 1.0;
    double a_lo = -1, a_hi = -1, phi_lo = 0;
    bool have_bracket = false, found = false;
    Probe p;
    double a_acc = 0;
    for (int tries = 0; tries < 30; ++tries) {
      probe(res.x, d, a, p);
      if (!p.finite || p.f > phi0 + kC1 * a * dphi0 || (tries > 0 && p.f >= phi_prev)) {
        a_lo = a_prev;
        phi_lo = phi_prev;
        a_hi = a;
        have_bracket = true;
        break;
      }
      if (std::fabs(p.df) <= -kC2 * dphi0) {
        found = true;
        a_acc = a;
        break;
      }
      if (p.df >= 0) {
        a_lo = a;
        phi_lo = p.f;
        a_hi = a_prev;
        have_bracket = true;
        break;
      }
      a_prev = a;
      phi_prev = p.f;
      a *= 2.0;
    }
    if (!found && have_bracket) {
      for (int z = 0; z < 50; ++z) {
        a = 0.5 * (a_lo + a_hi);
        if (std::fabs(a_hi - a_lo) < 1e-16 * (1.0 + std::fabs(a_lo))) break;
        probe(res.x, d, a, p);
        if (!p.finite || p.f > phi0 + kC1 * a * dphi0 || p.f >= phi_lo) {
          a_hi = a;
        } else {
          if (std::fabs(p.df) <= -kC2 * dphi0) {
            found = true;
            a_acc = a;
            break;
          }
          if (p.df * (a_hi - a_lo) >= 0) a_hi = a_lo;
          a_lo = a;
          phi_lo = p.f;
        }
      }
    }
    if (!found) {
      res.line_search_failed = true;
      break;
    }

    // Accept the step; the successful probe left xt/gt evaluated at a_acc.
    std::vector<double> s(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = a_acc * d[i];
      y[i] = gt[i] - g[i];
    }
    res.x = xt;
    f = p.f;
    g = gt;
    ++res.iterations;

    const double sy = dot(s, y);
    if (sy > 1e-12 * norm(s) * norm(y)) {
      ss.push_back(std::move(s));
      ys.push_back(std::move(y));
      rho.push_back(1.0 / sy);
      if (int(ss.size()) > memory) {
        ss.pop_front();
        ys.pop_front();
        rho.pop_front();
      }
    }
  }

  if (best_f < f) {
    res.x = best_x;
    res.loss = best_f;
  } else {
    res.loss = f;
  }
  return res;
}

} // namespace pde_embed
