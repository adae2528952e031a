#pragma once

#include <string>
#include <vector>

#include "pde_embed/graph.hpp"

namespace pde_embed {

struct FdOptions {
  double h1 = 1e-5; // central-difference steps per derivative order
  double h2 = 1e-4;
  double h3 = 1e-3;
  double grad_h = 1e-6;  // parameter step, scaled by max(1, |param|)
  int max_order = 3;
  int max_params = 0; // 0 checks every parameter
  bool gradients = true;
};

struct FdRow {
  std::string var;
  int order = 0;
  double max_rel = 0;
};

/// Worst relative disagreement per (variable, order), plus the parameter
/// gradient check. rel = |fd - symbolic| / max(1, |symbolic|).
struct FdReport {
  std::vector<FdRow> rows;
  double grad_max_rel = 0;
  std::size_t grad_params = 0;

  double worst(int order) const;
  double worst() const; // across every row and the gradient check
};

/// Cross-check the graph's symbolic derivatives against central finite
/// differences at the batch points: input derivatives of the root up to
/// max_order for every named column, and the gradient of the mean squared
/// root with respect to every network parameter.
FdReport fd_check(const Graph& g, const NetworkBank& bank, const EvalBatch& batch,
                  const FdOptions& opt = {});

} // namespace pde_embed
