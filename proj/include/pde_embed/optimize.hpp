#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pde_embed/mlp.hpp"

namespace pde_embed {

struct OptimizeError : std::runtime_error {
  enum class Kind { NonFiniteGradient };
  OptimizeError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
  Kind kind;
};

/// First/second-moment accumulators, one pair of vectors per bank entry.
struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long t = 0;
  std::vector<std::vector<double>> m, v;

  static AdamState for_bank(const NetworkBank& bank, double lr = 1e-3);

  bool operator==(const AdamState&) const = default;
};

/// One bias-corrected Adam update across every network. `grads` is indexed
/// by bank entry; an empty entry counts as a zero gradient for that network.
void adam_step(AdamState& st, NetworkBank& bank, const std::vector<std::vector<double>>& grads);

/// Evaluates the objective at x and fills grad (resized by the callee).
using LossGradFn = std::function<double(const std::vector<double>&, std::vector<double>&)>;

struct LbfgsResult {
  std::vector<double> x;
  double loss = 0;
  int iterations = 0;
  bool converged = false;          // gradient norm fell below 1e-9
  bool line_search_failed = false; // x is the best point seen, not a Wolfe point
};

/// Two-loop L-BFGS with a strong-Wolfe line search (c1=1e-4, c2=0.9).
/// Stops on gradient norm < 1e-9, the iteration cap, or a failed line
/// search; the returned point never has a higher loss than x0.
LbfgsResult lbfgs_refine(std::vector<double> x0, const LossGradFn& fg, int iterations,
                         int memory = 10);

// Concatenation of every network's flat parameters, in bank order.
std::vector<double> gather_params(const NetworkBank& bank);
void scatter_params(NetworkBank& bank, const std::vector<double>& flat);

} // namespace pde_embed
