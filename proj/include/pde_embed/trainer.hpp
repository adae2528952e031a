#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "pde_embed/checkpoint.hpp"
#include "pde_embed/loss.hpp"
#include "pde_embed/problem.hpp"

namespace pde_embed {

struct ValidationSpec {
  enum class Kind { None, DataHoldout, Residual };
  Kind kind = Kind::None;
  double fraction = 0.1; // held-out share of the labeled-data pool
};

struct TrainConfig {
  long epochs = 1;
  std::size_t batch_size = 0; // 0 runs full-batch
  std::uint64_t seed = 0;
  double lr = 1e-3;
  MultiplierStrategy multipliers;
  bool lbfgs = false;
  int lbfgs_iterations = 500;
  int lbfgs_memory = 10;
  ValidationSpec validation;
  long log_every = 0; // epochs between progress lines, 0 is silent

  // Early stopping on the validation metric: checked every `early_stop_every`
  // epochs (0 disables); stops after `early_stop_patience` consecutive checks
  // that improve by less than `early_stop_rel` relative to the best metric.
  // Never fires before patience*cadence epochs. Requires a validation kind.
  long early_stop_every = 0;
  int early_stop_patience = 3;
  double early_stop_rel = 1e-6;
};

struct EpochRow {
  long epoch = 0; // 1-based
  LossTerms terms; // means of the per-batch means
  double lambda_r = 1, lambda_k = 1; // after this epoch's update
  double total = 0; // mean of the per-batch weighted totals
  double val_metric = std::numeric_limits<double>::quiet_NaN();
  double seconds = 0; // wall clock; the one column outside the determinism contract
};

struct TrainHistory {
  std::vector<EpochRow> rows;
  bool lbfgs_ran = false;
  int lbfgs_iterations = 0;
  bool lbfgs_converged = false;
  bool lbfgs_line_search_failed = false;

  // epoch,L_r,L_IC,L_BC,L_Data,L_K,lambda_r,lambda_K,total,val_metric,seconds
  std::string to_csv() const;
};

struct TrainResult {
  Checkpoint ckpt;
  TrainHistory history;
};

/// Fresh networks, then the training loop: points are sampled once per run;
/// each epoch shuffles every point set and slices all of them jointly into
/// ceil(N_c/batch) proportional mini-batches, takes one Adam step per batch,
/// and updates the multipliers once (batch-summed terms for Step,
/// batch-averaged for Ascent); optionally an L-BFGS tail runs full-batch
/// with the multipliers frozen. Bitwise deterministic for identical inputs,
/// excepting the seconds column.
TrainResult train(const ProblemSpec& spec, const std::map<std::string, MlpSpec>& net_specs,
                  const TrainConfig& cfg);

/// The same loop over pre-initialized networks (restore or transfer); shares
/// cfg.seed's point sets and batch order with a scratch run.
TrainResult train_from(const ProblemSpec& spec, NetworkBank bank, const TrainConfig& cfg);

} // namespace pde_embed
