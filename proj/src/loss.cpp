#include "pde_embed/loss.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pde_embed/rng.hpp"

namespace pde_embed {

double total_loss(const LossTerms& t, const MultiplierState& m) {
  return t.l_data + t.l_ic + t.l_bc + m.lambda_k * t.l_k + m.lambda_r * t.l_r;
}

void update_multipliers(MultiplierState& st, const LossTerms& terms) {
  switch (st.strategy.kind) {
    case MultiplierStrategy::Kind::Fixed: break;
    case MultiplierStrategy::Kind::Step:
      st.lambda_r = std::max(st.lambda_r, st.lambda_r + st.strategy.s_r * terms.l_r);
      st.lambda_k = std::max(st.lambda_k, st.lambda_k + st.strategy.s_k * terms.l_k);
      break;
    case MultiplierStrategy::Kind::Ascent:
      st.lambda_r = std::max(st.lambda_r, st.lambda_r + st.strategy.alpha * terms.l_r);
      st.lambda_k = std::max(st.lambda_k, st.lambda_k + st.strategy.alpha * terms.l_k);
      break;
  }
  ++st.iteration;
  st.history.push_back({st.lambda_r, st.lambda_k});
}

namespace {

std::pair<double, double> axis_bounds(const ProblemSpec& spec, const std::string& axis) {
  const auto names = spec.independent_names();
  for (std::size_t a = 0; a < names.size(); ++a) {
    if (names[a] != axis) continue;
    if (a + 1 == names.size()) return {spec.t_lo, spec.t_hi};
    if (a == 0) return {spec.x_lo, spec.x_hi};
    return {spec.y_lo, spec.y_hi};
  }
  throw std::invalid_argument("unknown axis '" + axis + "'");
}

MlpParams make_params(const MlpSpec& ms, const ProblemSpec& spec,
                      const std::vector<std::string>& input_axes, const std::string& net_name,
                      std::uint64_t seed) {
  if (ms.input_dim != int(input_axes.size()))
    throw std::invalid_argument("network '" + net_name + "' input width does not match its arguments");
  MlpParams p = init(ms, seed);
  for (std::size_t d = 0; d < input_axes.size(); ++d) {
    const auto [lo, hi] = axis_bounds(spec, input_axes[d]);
    p.in_scale[d] = 0.5 * (hi - lo); // domain box maps to [-1,1]
    p.in_shift[d] = 0.5 * (hi + lo);
  }
  const auto it = spec.output_bounds.find(net_name);
  if (it != spec.output_bounds.end()) {
    if (ms.output_dim != 1)
      throw std::invalid_argument("output bounds assume a scalar network");
    p.out_scale[0] = it->second.second - it->second.first;
    p.out_shift[0] = it->second.first;
  }
  return p;
}

Graph pred_minus_target(const NetworkBank& bank, int net_idx,
                        const std::vector<std::string>& arg_names) {
  Graph g(&bank);
  std::vector<int> in;
  for (const auto& nm : arg_names) in.push_back(g.add_input(nm));
  const int tgt = g.add_input("__target");
  const int u = g.add_net(net_idx, in);
  g.root = g.add(Node::Op::Sub, u, tgt);
  return g;
}

Graph endpoint_gap(const NetworkBank& bank, int net_idx, const std::vector<std::string>& names,
                   int axis) {
  Graph g(&bank);
  const int lo = g.add_input("__lo");
  const int hi = g.add_input("__hi");
  std::vector<int> in_lo, in_hi;
  for (std::size_t a = 0; a < names.size(); ++a) {
    if (int(a) == axis) {
      in_lo.push_back(lo);
      in_hi.push_back(hi);
    } else {
      const int id = g.add_input(names[a]);
      in_lo.push_back(id);
      in_hi.push_back(id);
    }
  }
  const int ul = g.add_net(net_idx, in_lo);
  const int uh = g.add_net(net_idx, in_hi);
  g.root = g.add(Node::Op::Sub, ul, uh);
  return g;
}

void build_graphs(CompiledProblem& cp) {
  const ProblemSpec& spec = cp.spec;
  const std::vector<std::string> names = spec.independent_names();

  cp.primary_net = spec.symbols.primary_vars[0];
  const int idx_u = cp.bank.find(cp.primary_net);
  if (idx_u < 0) throw std::invalid_argument("bank is missing the primary network");

  std::map<std::string, int> bindings;
  bindings[cp.primary_net] = idx_u;
  const CoefficientDef* fitted_def = nullptr;
  for (const auto& [cname, def] : spec.symbols.coefficients) {
    if (def.kind != CoefficientDef::Kind::FittedField) continue;
    const int idx = cp.bank.find(cname);
    if (idx < 0) throw std::invalid_argument("bank is missing fitted field '" + cname + "'");
    bindings[cname] = idx;
    if (!cp.fitted_net.empty() && spec.n_coeff > 0)
      throw std::invalid_argument("coefficient measurements with several fitted fields are ambiguous");
    if (cp.fitted_net.empty()) {
      cp.fitted_net = cname;
      fitted_def = &def;
    }
  }

  cp.residual = lower(*parse(spec.residual, spec.symbols), spec.symbols, cp.bank, bindings);
  cp.initial = pred_minus_target(cp.bank, idx_u, names);
  cp.dirichlet = pred_minus_target(cp.bank, idx_u, names);
  cp.data = pred_minus_target(cp.bank, idx_u, names);
  if (fitted_def) {
    cp.coeff = pred_minus_target(cp.bank, cp.bank.find(cp.fitted_net), fitted_def->args);
    cp.has_coeff = spec.n_coeff > 0;
  }
  for (const auto& seg : spec.neumann)
    cp.neumann.push_back(
        lower(*parse(seg.flux_residual, spec.symbols), spec.symbols, cp.bank, bindings));
  for (const auto& pp : spec.periodic)
    cp.periodic.push_back(endpoint_gap(cp.bank, idx_u, names, pp.axis));

  cp.e_residual = std::make_unique<Evaluator>(cp.residual, cp.bank);
  cp.e_initial = std::make_unique<Evaluator>(cp.initial, cp.bank);
  cp.e_dirichlet = std::make_unique<Evaluator>(cp.dirichlet, cp.bank);
  cp.e_data = std::make_unique<Evaluator>(cp.data, cp.bank);
  if (fitted_def) cp.e_coeff = std::make_unique<Evaluator>(cp.coeff, cp.bank);
  for (auto& g : cp.neumann) cp.e_neumann.push_back(std::make_unique<Evaluator>(g, cp.bank));
  for (auto& g : cp.periodic) cp.e_periodic.push_back(std::make_unique<Evaluator>(g, cp.bank));
}

EvalBatch to_batch(const NetworkBank& bank, const PointTable& t) {
  EvalBatch b;
  b.bank = &bank;
  for (std::size_t i = 0; i < t.names.size(); ++i) b.add(t.names[i], t.cols[i]);
  if (!t.target.empty()) b.add("__target", t.target);
  return b;
}

double term_loss(const Evaluator& e, const NetworkBank& bank, const PointTable& t) {
  if (t.rows() == 0) return 0.0;
  const std::vector<double> v = e.values(to_batch(bank, t));
  double s = 0;
  for (double x : v) s += x * x;
  return s / double(v.size());
}

} // namespace

std::unique_ptr<CompiledProblem> compile(const ProblemSpec& spec,
                                         const std::map<std::string, MlpSpec>& net_specs,
                                         std::uint64_t seed) {
  spec.validate();
  NetworkBank bank;
  const std::string& uname = spec.symbols.primary_vars[0];
  const auto u_it = net_specs.find(uname);
  if (u_it == net_specs.end())
    throw std::invalid_argument("no architecture given for primary '" + uname + "'");
  bank.add({uname, NetworkRole::Primary,
            make_params(u_it->second, spec, spec.independent_names(), uname,
                        Rng::derive(seed, "init:" + uname))});
  for (const auto& [cname, def] : spec.symbols.coefficients) {
    if (def.kind != CoefficientDef::Kind::FittedField) continue;
    const auto it = net_specs.find(cname);
    if (it == net_specs.end())
      throw std::invalid_argument("no architecture given for fitted field '" + cname + "'");
    bank.add({cname, NetworkRole::FittedField,
              make_params(it->second, spec, def.args, cname, Rng::derive(seed, "init:" + cname))});
  }
  return compile_with(spec, std::move(bank));
}

std::unique_ptr<CompiledProblem> compile_with(const ProblemSpec& spec, NetworkBank bank) {
  spec.validate();
  std::unique_ptr<CompiledProblem> cp(new CompiledProblem());
  cp->spec = spec;
  cp->bank = std::move(bank);
  build_graphs(*cp);
  return cp;
}

LossTerms loss_terms(const CompiledProblem& cp, const PointSets& pts) {
  if (pts.neumann.size() != cp.e_neumann.size() || pts.periodic.size() != cp.e_periodic.size())
    throw std::invalid_argument("point sets do not match the compiled segments");
  LossTerms t;
  t.l_r = term_loss(*cp.e_residual, cp.bank, pts.collocation);
  t.l_ic = term_loss(*cp.e_initial, cp.bank, pts.initial);
  t.l_bc = term_loss(*cp.e_dirichlet, cp.bank, pts.dirichlet);
  for (std::size_t s = 0; s < cp.e_neumann.size(); ++s)
    t.l_bc += term_loss(*cp.e_neumann[s], cp.bank, pts.neumann[s]);
  for (std::size_t s = 0; s < cp.e_periodic.size(); ++s)
    t.l_bc += term_loss(*cp.e_periodic[s], cp.bank, pts.periodic[s]);
  t.l_data = term_loss(*cp.e_data, cp.bank, pts.data);
  if (cp.has_coeff) t.l_k = term_loss(*cp.e_coeff, cp.bank, pts.coeff);
  return t;
}

double data_mse(const CompiledProblem& cp, const PointTable& t) {
  return term_loss(*cp.e_data, cp.bank, t);
}

double residual_mse(const CompiledProblem& cp, const PointTable& t) {
  return term_loss(*cp.e_residual, cp.bank, t);
}

TermGrad total_loss_and_grad(const CompiledProblem& cp, const PointSets& pts,
                             const MultiplierState& mult) {
  if (pts.neumann.size() != cp.e_neumann.size() || pts.periodic.size() != cp.e_periodic.size())
    throw std::invalid_argument("point sets do not match the compiled segments");
  TermGrad out;
  out.grads.resize(cp.bank.nets.size());
  for (std::size_t i = 0; i < cp.bank.nets.size(); ++i)
    out.grads[i].assign(cp.bank.nets[i].params.flat.size(), 0.0);

  auto acc = [&](const Evaluator& e, const PointTable& t, double weight) -> double {
    if (t.rows() == 0) return 0.0;
    const GradResult r = e.loss_and_grad(to_batch(cp.bank, t));
    for (std::size_t i = 0; i < r.grads.size(); ++i) {
      if (r.grads[i].empty()) continue;
      double* dst = out.grads[i].data();
      const double* src = r.grads[i].data();
      for (std::size_t j = 0; j < r.grads[i].size(); ++j) dst[j] += weight * src[j];
    }
    return r.loss;
  };

  out.terms.l_r = acc(*cp.e_residual, pts.collocation, mult.lambda_r);
  out.terms.l_ic = acc(*cp.e_initial, pts.initial, 1.0);
  out.terms.l_bc = acc(*cp.e_dirichlet, pts.dirichlet, 1.0);
  for (std::size_t s = 0; s < cp.e_neumann.size(); ++s)
    out.terms.l_bc += acc(*cp.e_neumann[s], pts.neumann[s], 1.0);
  for (std::size_t s = 0; s < cp.e_periodic.size(); ++s)
    out.terms.l_bc += acc(*cp.e_periodic[s], pts.periodic[s], 1.0);
  out.terms.l_data = acc(*cp.e_data, pts.data, 1.0);
  if (cp.has_coeff) out.terms.l_k = acc(*cp.e_coeff, pts.coeff, mult.lambda_k);
  out.total = total_loss(out.terms, mult);
  return out;
}

} // namespace pde_embed
