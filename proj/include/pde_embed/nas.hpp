#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "pde_embed/trainer.hpp"

namespace pde_embed {

struct NasError : std::runtime_error {
  enum class Kind { EmptySet, NoValidationData };
  NasError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
  Kind kind;
};

struct SearchSpace {
  std::vector<int> layers;
  std::vector<int> widths;
  std::vector<ActivationKind> activations;

  void validate() const; // EmptySet on an empty axis, invalid_argument on duplicates
};

struct CellConfig {
  int layers = 0;
  int width = 0;
  ActivationKind activation = ActivationKind::Tanh;

  bool operator==(const CellConfig&) const = default;
};

/// Cartesian product in lexicographic (layers, width, activation) order.
std::vector<CellConfig> enumerate_cells(const SearchSpace& space);

struct NasConfig {
  enum class Criterion { DataHoldout, Residual };
  Criterion criterion = Criterion::DataHoldout;
  double holdout_fraction = 0.1;
  long budget_epochs = 2000;
  bool early_stop = true;
  long check_every = 100;
  int patience = 3;
  double min_rel_improvement = 1e-6;
};

struct CellResult {
  CellConfig config;
  std::size_t enum_index = 0; // position in enumeration order, the tiebreak
  double val_metric = 0;
  long epochs = 0;
  double seconds = 0;
};

struct SearchResult {
  std::vector<CellResult> leaderboard; // ascending metric, ties by enum_index
  NasConfig::Criterion criterion = NasConfig::Criterion::DataHoldout;

  const CellConfig& best() const { return leaderboard.front().config; }
  std::string to_csv() const; // layers,width,activation,val_metric,epochs,seconds
};

/// Trains every cell with the shared cfg.seed (so results reflect the
/// architecture, not initialization luck) under the chosen validation
/// criterion and early-stopping rule, then ranks by final validation metric.
/// `companion_nets` supplies architectures for any non-primary networks the
/// problem needs (fitted coefficient fields); the primary's entry is replaced
/// by each cell.
SearchResult search(const SearchSpace& space, const ProblemSpec& spec, const TrainConfig& cfg,
                    const NasConfig& nas,
                    const std::map<std::string, MlpSpec>& companion_nets = {});

} // namespace pde_embed
