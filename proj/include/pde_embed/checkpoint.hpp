#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pde_embed/loss.hpp"
#include "pde_embed/mlp.hpp"
#include "pde_embed/optimize.hpp"

namespace pde_embed {

struct CheckpointError : std::runtime_error {
  enum class Kind { VersionMismatch, CorruptFile, ShapeMismatch, IoError };
  CheckpointError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
  Kind kind;
};

constexpr int kCheckpointVersion = 1;

/// A trained state plus enough provenance to resume or transfer. The file
/// layout (text header, base64 little-endian double payload, fnv1a-64
/// checksum) is described in docs/checkpoint-format.md.
struct Checkpoint {
  int version = kCheckpointVersion;
  NetworkBank bank;
  MultiplierState multipliers;
  std::optional<AdamState> adam;
  std::uint64_t seed = 0;
  std::string problem;
  long epochs = 0;
  LossTerms final_terms;
};

void save_checkpoint(const Checkpoint& c, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

enum class TransferMode { Strict, Partial };

struct TransferReport {
  std::vector<std::string> notes; // one line per target network
};

/// Initializes the target bank's parameters from a checkpoint. Source
/// networks are matched by (role, name), falling back to the unique source
/// entry with the same role, so a primary transfers across problems whose
/// solution variables are named differently.
///
/// Strict requires an identical layer structure and copies everything,
/// normalization maps included. Partial copies each affine layer whose
/// (fan_in, fan_out) matches positionally and leaves the rest of the target's
/// fresh initialization (and its own normalization maps) in place. Optimizer
/// and multiplier state never transfer.
NetworkBank transfer_init(const Checkpoint& ckpt, NetworkBank target, TransferMode mode,
                          TransferReport* report = nullptr);

} // namespace pde_embed
