#pragma once

#include <vector>

#include "pde_embed/graph.hpp"

namespace pde_embed {

namespace jet_detail {

// One term of the chain-rule expansion of an activation jet coefficient:
// coeff * sigma^(sigma_order)(z0) * prod over factors of z[basis index].
struct TapeTerm {
  int sigma_order = 1;
  int nfactors = 0;
  std::array<int, 3> factors{-1, -1, -1};
  double coeff = 1.0;
};

// Downward closure of the used multi-indices, zero first, then sorted by
// (total order, lexicographic). The closure is what layer propagation needs:
// every coefficient of order k pulls in all componentwise-smaller ones.
std::vector<MultiIndex> closed_basis(const std::vector<MultiIndex>& used);

// Expansion terms per basis entry (entry 0 has none; its value is sigma(z0)).
// Built by enumerating set partitions of each multi-index's derivative
// multiset, so equal terms carry integer multiplicities.
std::vector<std::vector<TapeTerm>> build_tapes(const std::vector<MultiIndex>& basis);

} // namespace jet_detail

// Executes a graph over batches in fixed-size chunks. Network applications
// are grouped by (network, input tuple) and each group is propagated through
// the layers as a jet: one coefficient per derivative multi-index in the
// group's closed basis. Results are bitwise reproducible for any thread
// count; see kernels.hpp for the underlying contract.
class Evaluator {
public:
  Evaluator(const Graph& g, const NetworkBank& bank);

  std::vector<double> values(const EvalBatch& batch) const;
  GradResult loss_and_grad(const EvalBatch& batch) const;

  std::size_t live_node_count() const { return order_.size(); }

private:
  struct Family {
    int net = -1;
    int arity = 0;
    std::array<int, 4> in_nodes{-1, -1, -1, -1};
    std::array<int, 4> in_slots{-1, -1, -1, -1};
    std::vector<MultiIndex> basis;
    int max_order = 0;
    std::vector<std::vector<jet_detail::TapeTerm>> tapes;
  };

  struct Workspace;

  const Graph& g_;
  const NetworkBank& bank_;
  std::vector<int> order_;                    // live node ids, ascending
  std::vector<Family> fams_;
  std::vector<std::array<int, 2>> net_ref_;   // node id -> {family, r*ncoeff + basis idx}

  void family_forward(const Family& f, const std::vector<const double*>& cols, std::size_t c0,
                      int nb, bool stash, Workspace& ws, int fam_idx) const;
  void family_reverse(const Family& f, int nb, Workspace& ws, int fam_idx,
                      std::vector<std::vector<double>>& grads) const;
  void node_forward(const EvalBatch& batch, const std::vector<const double*>& cols,
                    std::size_t c0, int nb, Workspace& ws) const;
};

} // namespace pde_embed
