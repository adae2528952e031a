#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace pde_embed {

// al is the Euclidean norm of pred - truth. rel_l2 is al over the truth
// norm and is absent when the truth norm is zero; r2 is the coefficient of
// determination and is absent when the truth has zero variance.
struct EvalReport {
  double al = 0.0;
  std::optional<double> rel_l2;
  std::optional<double> r2;
  std::size_t n = 0;
};

EvalReport evaluate_metrics(const std::vector<double>& pred, const std::vector<double>& truth);

struct NoiseSpec {
  double level_percent = 0.0;
  std::uint64_t seed = 0;
};

// out_i = field_i + range * (a/100) * eps_i with eps uniform on [-1, 1] and
// range the max minus min of range_source.
std::vector<double> add_noise(const std::vector<double>& field,
                              const std::vector<double>& range_source, const NoiseSpec& spec);

} // namespace pde_embed
