#include "pde_embed/problem.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pde_embed/graph.hpp"

namespace pde_embed {

void PointTable::validate() const {
  if (cols.size() != names.size()) throw std::invalid_argument("point table column count mismatch");
  const std::size_t n = rows();
  for (const auto& c : cols)
    if (c.size() != n) throw std::invalid_argument("point table columns have unequal lengths");
  if (!target.empty() && target.size() != n)
    throw std::invalid_argument("point table target length mismatch");
  for (const auto& c : cols)
    for (double v : c)
      if (!std::isfinite(v)) throw std::invalid_argument("point table holds a non-finite value");
  for (double v : target)
    if (!std::isfinite(v)) throw std::invalid_argument("point table target holds a non-finite value");
}

std::vector<std::string> ProblemSpec::independent_names() const {
  return symbols.independent_vars;
}

void ProblemSpec::validate() const {
  symbols.validate();
  if (residual.empty()) throw std::invalid_argument("residual string is empty");
  if (symbols.primary_vars.size() != 1)
    throw std::invalid_argument("training problems use exactly one primary variable");
  const std::size_t dims = symbols.independent_vars.size();
  if (dims != 2 && dims != 3)
    throw std::invalid_argument("expected (x,t) or (x,y,t) independent variables");
  if (two_d() != (dims == 3))
    throw std::invalid_argument("domain dimensionality does not match the symbol context");
  if (!(x_lo < x_hi)) throw std::invalid_argument("x bounds out of order");
  if (two_d() && !(y_lo < y_hi)) throw std::invalid_argument("y bounds out of order");
  if (!(t_lo < t_hi)) throw std::invalid_argument("t bounds out of order");
  for (int c : {n_collocation, n_initial, n_dirichlet, n_neumann, n_data, n_coeff})
    if (c < 0) throw std::invalid_argument("sample counts must be nonnegative");
  for (const auto& seg : dirichlet) {
    if (!two_d() && (seg.side == Side::YMin || seg.side == Side::YMax))
      throw std::invalid_argument("y-side segment on a 1D domain");
    if (seg.value.empty()) throw std::invalid_argument("Dirichlet segment without a value");
  }
  for (const auto& seg : neumann) {
    if (!two_d() && (seg.side == Side::YMin || seg.side == Side::YMax))
      throw std::invalid_argument("y-side segment on a 1D domain");
    if (seg.flux_residual.empty()) throw std::invalid_argument("Neumann segment without a flux");
  }
  for (const auto& pp : periodic) {
    if (pp.axis != 0 && pp.axis != 1) throw std::invalid_argument("periodic axis out of range");
    if (pp.axis == 1 && !two_d()) throw std::invalid_argument("periodic y axis on a 1D domain");
  }
  if (n_initial > 0 && initial.empty() && !initial_grid.has_value())
    throw std::invalid_argument("initial points requested without an initial state");
  if (n_data > 0) {
    data_pool.validate();
    if (data_pool.target.empty())
      throw std::invalid_argument("labeled data pool must carry target values");
  }
  bool any_fitted = false;
  for (const auto& [cname, def] : symbols.coefficients)
    any_fitted = any_fitted || def.kind == CoefficientDef::Kind::FittedField;
  if (n_coeff > 0) {
    if (!any_fitted)
      throw std::invalid_argument("coefficient measurements requested without a fitted field");
    coeff_pool.validate();
    if (coeff_pool.target.empty())
      throw std::invalid_argument("coefficient pool must carry target values");
  }
  for (const auto& [nname, bounds] : output_bounds)
    if (!(bounds.second > bounds.first))
      throw std::invalid_argument("output bounds out of order for " + nname);
}

std::vector<double> evaluate_expression(const std::string& expr,
                                        const std::vector<std::string>& names,
                                        const std::vector<const std::vector<double>*>& cols) {
  if (names.size() != cols.size()) throw std::invalid_argument("name/column count mismatch");
  SymbolContext ctx;
  ctx.independent_vars = names;
  AstPtr ast = parse(expr, ctx);
  static const NetworkBank kNoNets;
  Graph g = lower(*ast, ctx, kNoNets, {});
  EvalBatch batch;
  for (std::size_t i = 0; i < names.size(); ++i) batch.add(names[i], *cols[i]);
  return evaluate(g, batch);
}

namespace {

double sample_grid(const GridField& g, double x, double y) {
  auto axis = [](double v, double v0, double dv, int n, int& i0, double& f) {
    if (n == 1) {
      i0 = 0;
      f = 0;
      return;
    }
    double gp = (v - v0) / dv;
    gp = std::min(std::max(gp, 0.0), double(n - 1));
    i0 = std::min(int(gp), n - 2);
    f = gp - i0;
  };
  int ix, iy;
  double fx, fy;
  axis(x, g.x0, g.dx, g.nx, ix, fx);
  axis(y, g.y0, g.dy, g.ny, iy, fy);
  const double v00 = g.at(ix, iy, 0);
  const double v10 = g.at(std::min(ix + 1, g.nx - 1), iy, 0);
  const double v01 = g.at(ix, std::min(iy + 1, g.ny - 1), 0);
  const double v11 = g.at(std::min(ix + 1, g.nx - 1), std::min(iy + 1, g.ny - 1), 0);
  return (1 - fx) * (1 - fy) * v00 + fx * (1 - fy) * v10 + (1 - fx) * fy * v01 + fx * fy * v11;
}

} // namespace

std::vector<double> initial_values(const ProblemSpec& spec, const std::vector<std::string>& names,
                                   const std::vector<const std::vector<double>*>& cols) {
  if (!spec.initial_grid.has_value()) return evaluate_expression(spec.initial, names, cols);
  const GridField& g = *spec.initial_grid;
  const std::vector<double>* xs = nullptr;
  const std::vector<double>* ys = nullptr;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i == 0) xs = cols[i];
    else if (i == 1 && spec.two_d()) ys = cols[i];
  }
  if (!xs) throw std::invalid_argument("initial grid sampling needs an x column");
  std::vector<double> out(xs->size());
  for (std::size_t r = 0; r < out.size(); ++r)
    out[r] = sample_grid(g, (*xs)[r], ys ? (*ys)[r] : g.y0);
  return out;
}

} // namespace pde_embed
