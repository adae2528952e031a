#include "pde_embed/fdcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pde_embed/jet.hpp"

namespace pde_embed {

namespace {

double rel_err(double fd, double sym) {
  return std::fabs(fd - sym) / std::max(1.0, std::fabs(sym));
}

std::vector<double> eval_shifted(const Graph& g, const EvalBatch& base, const std::string& var,
                                 double shift) {
  EvalBatch b = base;
  for (auto& [name, col] : b.columns)
    if (name == var)
      for (double& v : col) v += shift;
  return evaluate(g, b);
}

double loss_of(const std::vector<double>& vals) {
  double acc = 0;
  for (double v : vals) acc += v * v;
  return vals.empty() ? 0.0 : acc / double(vals.size());
}

} // namespace

double FdReport::worst(int order) const {
  double w = 0;
  for (const auto& r : rows)
    if (r.order == order) w = std::max(w, r.max_rel);
  return w;
}

double FdReport::worst() const {
  double w = grad_max_rel;
  for (const auto& r : rows) w = std::max(w, r.max_rel);
  return w;
}

FdReport fd_check(const Graph& g, const NetworkBank& bank, const EvalBatch& batch,
                  const FdOptions& opt) {
  if (g.root < 0) throw std::invalid_argument("fd_check: graph has no root");
  batch.validate();
  FdReport rep;
  const std::size_t n = batch.rows();

  for (const auto& [var, col] : batch.columns) {
    (void)col;
    Graph d = compact(g, g.root);
    for (int order = 1; order <= opt.max_order; ++order) {
      std::vector<double> sym;
      try {
        const int droot = differentiate(d, d.root, var);
        d = compact(d, droot);
        sym = evaluate(d, batch);
      } catch (const GraphError&) {
        break; // graph already carries derivatives; ladder ends where order 3 would be exceeded
      }

      std::vector<double> fd(n, 0.0);
      if (order == 1) {
        const double h = opt.h1;
        const auto up = eval_shifted(g, batch, var, h);
        const auto dn = eval_shifted(g, batch, var, -h);
        for (std::size_t i = 0; i < n; ++i) fd[i] = (up[i] - dn[i]) / (2 * h);
      } else if (order == 2) {
        const double h = opt.h2;
        const auto up = eval_shifted(g, batch, var, h);
        const auto mid = evaluate(g, batch);
        const auto dn = eval_shifted(g, batch, var, -h);
        for (std::size_t i = 0; i < n; ++i) fd[i] = (up[i] - 2 * mid[i] + dn[i]) / (h * h);
      } else {
        const double h = opt.h3;
        const auto u2 = eval_shifted(g, batch, var, 2 * h);
        const auto u1 = eval_shifted(g, batch, var, h);
        const auto d1 = eval_shifted(g, batch, var, -h);
        const auto d2 = eval_shifted(g, batch, var, -2 * h);
        for (std::size_t i = 0; i < n; ++i)
          fd[i] = (u2[i] - 2 * u1[i] + 2 * d1[i] - d2[i]) / (2 * h * h * h);
      }

      FdRow row{var, order, 0.0};
      for (std::size_t i = 0; i < n; ++i) row.max_rel = std::max(row.max_rel, rel_err(fd[i], sym[i]));
      rep.rows.push_back(row);
    }
  }

  if (opt.gradients) {
    NetworkBank local = bank;
    Graph base = compact(g, g.root);
    Evaluator ev(base, local);
    const GradResult sym = ev.loss_and_grad(batch);
    for (std::size_t ni = 0; ni < local.nets.size(); ++ni) {
      if (ni < sym.grads.size() && sym.grads[ni].empty()) continue; // net unused by this graph
      auto& flat = local.nets[ni].params.flat;
      const std::size_t count =
          opt.max_params > 0 ? std::min(flat.size(), std::size_t(opt.max_params)) : flat.size();
      for (std::size_t j = 0; j < count; ++j) {
        const double saved = flat[j];
        const double h = opt.grad_h * std::max(1.0, std::fabs(saved));
        flat[j] = saved + h;
        const double up = loss_of(ev.values(batch));
        flat[j] = saved - h;
        const double dn = loss_of(ev.values(batch));
        flat[j] = saved;
        const double fd = (up - dn) / (2 * h);
        rep.grad_max_rel = std::max(rep.grad_max_rel, rel_err(fd, sym.grads[ni][j]));
        ++rep.grad_params;
      }
    }
  }
  return rep;
}

} // namespace pde_embed
