#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace pde_embed {

/// Deterministic random stream. Every draw goes through explicit helpers so
/// results are identical across platforms and standard-library versions
/// (std::mt19937_64 is fully specified; the distributions below are ours).
class Rng {
public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t next_u64() { return gen_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return double(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; the paired value is cached.
  double normal();

  /// Derive an independent stream seed from (seed, tag).
  static uint64_t derive(uint64_t seed, std::string_view tag);

private:
  std::mt19937_64 gen_;
  double spare_ = 0;
  bool has_spare_ = false;
};

} // namespace pde_embed
