#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "pde_embed/graph.hpp"
#include "pde_embed/jet.hpp"
#include "pde_embed/problem.hpp"

namespace pde_embed {

struct LossTerms {
  double l_r = 0, l_ic = 0, l_bc = 0, l_data = 0, l_k = 0;
};

struct MultiplierStrategy {
  enum class Kind { Fixed, Step, Ascent };
  Kind kind = Kind::Fixed;
  double s_r = 1.25;   // step size on the residual multiplier
  double s_k = 1.1;    // step size on the coefficient multiplier
  double alpha = 1e-3; // gradient-ascent rate
};

/// Adaptive weights for the residual and coefficient terms. The IC/BC/data
/// weights stay fixed at 1. Step and Ascent only ever move the multipliers
/// up (loss terms are nonnegative).
struct MultiplierState {
  MultiplierStrategy strategy;
  double lambda_r = 1.0;
  double lambda_k = 1.0;
  long iteration = 0;
  std::vector<std::array<double, 2>> history; // (lambda_r, lambda_k) per update

  bool operator==(const MultiplierState&) const = default;
};

inline bool operator==(const MultiplierStrategy& a, const MultiplierStrategy& b) {
  return a.kind == b.kind && a.s_r == b.s_r && a.s_k == b.s_k && a.alpha == b.alpha;
}

/// l_data + l_ic + l_bc + lambda_k l_k + lambda_r l_r.
double total_loss(const LossTerms& t, const MultiplierState& m);

/// One multiplier update. Callers pass epoch aggregates: batch-summed terms
/// for Step, batch-averaged terms for Ascent (the ascent gradient of
/// lambda*L w.r.t. lambda is the loss itself).
void update_multipliers(MultiplierState& st, const LossTerms& terms);

/// A problem lowered against live networks: the residual graph, one
/// prediction-minus-target graph per data-like term, per-segment flux graphs,
/// and endpoint-identification graphs, each with a jet evaluator. Target
/// values enter through a reserved "__target" column.
class CompiledProblem {
public:
  CompiledProblem(const CompiledProblem&) = delete;
  CompiledProblem& operator=(const CompiledProblem&) = delete;

  ProblemSpec spec;
  NetworkBank bank;

  Graph residual;
  Graph initial;
  Graph dirichlet;
  Graph data;
  Graph coeff;
  std::vector<Graph> neumann;
  std::vector<Graph> periodic;

  std::unique_ptr<Evaluator> e_residual, e_initial, e_dirichlet, e_data, e_coeff;
  std::vector<std::unique_ptr<Evaluator>> e_neumann, e_periodic;

  bool has_coeff = false;
  std::string primary_net;
  std::string fitted_net; // empty when the problem has no fitted field

private:
  CompiledProblem() = default;
  friend std::unique_ptr<CompiledProblem> compile(const ProblemSpec&,
                                                  const std::map<std::string, MlpSpec>&,
                                                  std::uint64_t);
  friend std::unique_ptr<CompiledProblem> compile_with(const ProblemSpec&, NetworkBank);
};

/// Networks are created fresh: Glorot weights from streams derived from
/// `seed`, input maps spanning the domain box to [-1,1], output maps from
/// spec.output_bounds.
std::unique_ptr<CompiledProblem> compile(const ProblemSpec& spec,
                                         const std::map<std::string, MlpSpec>& net_specs,
                                         std::uint64_t seed);

/// Same lowering over an existing bank (checkpoint restore, transfer).
std::unique_ptr<CompiledProblem> compile_with(const ProblemSpec& spec, NetworkBank bank);

/// Mean-square losses over full point sets.
LossTerms loss_terms(const CompiledProblem& cp, const PointSets& pts);

/// Mean squared prediction-target mismatch over any labeled table.
double data_mse(const CompiledProblem& cp, const PointTable& t);

/// Mean squared residual over any collocation table.
double residual_mse(const CompiledProblem& cp, const PointTable& t);

/// Loss terms, their weighted total, and the total's parameter gradient
/// (indexed by bank entry) over the given (usually mini-batch) point sets.
struct TermGrad {
  LossTerms terms;
  double total = 0;
  std::vector<std::vector<double>> grads;
};

TermGrad total_loss_and_grad(const CompiledProblem& cp, const PointSets& pts,
                             const MultiplierState& mult);

} // namespace pde_embed
