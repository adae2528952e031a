#include "pde_embed/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pde_embed/rng.hpp"

namespace pde_embed {

EvalReport evaluate_metrics(const std::vector<double>& pred, const std::vector<double>& truth) {
  if (pred.size() != truth.size())
    throw std::invalid_argument("prediction and truth lengths differ");
  if (pred.size() < 2) throw std::invalid_argument("metrics need at least 2 points");
  const std::size_t n = pred.size();

  double sq_diff = 0.0, sq_truth = 0.0, mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = pred[i] - truth[i];
    sq_diff += d * d;
    sq_truth += truth[i] * truth[i];
    mean += truth[i];
  }
  mean /= double(n);
  double sq_var = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double c = truth[i] - mean;
    sq_var += c * c;
  }

  EvalReport r;
  r.n = n;
  r.al = std::sqrt(sq_diff);
  if (sq_truth > 0.0) r.rel_l2 = r.al / std::sqrt(sq_truth);
  if (sq_var > 0.0) r.r2 = 1.0 - sq_diff / sq_var;
  return r;
}

std::vector<double> add_noise(const std::vector<double>& field,
                              const std::vector<double>& range_source, const NoiseSpec& spec) {
  if (field.empty()) throw std::invalid_argument("cannot add noise to an empty field");
  if (range_source.empty()) throw std::invalid_argument("empty noise range source");
  if (spec.level_percent < 0.0) throw std::invalid_argument("noise level must be nonnegative");
  const auto [lo, hi] = std::minmax_element(range_source.begin(), range_source.end());
  const double amp = (*hi - *lo) * spec.level_percent / 100.0;
  Rng rng(spec.seed);
  std::vector<double> out(field.size());
  for (std::size_t i = 0; i < field.size(); ++i) out[i] = field[i] + amp * rng.uniform(-1.0, 1.0);
  return out;
}

} // namespace pde_embed
