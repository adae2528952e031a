#include "pde_embed/nas.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>
#include <sstream>

#include "pde_embed/util.hpp"

namespace pde_embed {

namespace {

template <class T>
void check_axis(const std::vector<T>& v, const char* what) {
  if (v.empty()) throw NasError(NasError::Kind::EmptySet, std::string(what) + " set is empty");
  std::set<T> uniq(v.begin(), v.end());
  if (uniq.size() != v.size())
    throw std::invalid_argument(std::string(what) + " set has duplicates");
}

} // namespace

void SearchSpace::validate() const {
  check_axis(layers, "layer-count");
  check_axis(widths, "width");
  check_axis(activations, "activation");
}

std::vector<CellConfig> enumerate_cells(const SearchSpace& space) {
  space.validate();
  std::vector<CellConfig> out;
  out.reserve(space.layers.size() * space.widths.size() * space.activations.size());
  for (int l : space.layers)
    for (int w : space.widths)
      for (ActivationKind a : space.activations) out.push_back({l, w, a});
  return out;
}

std::string SearchResult::to_csv() const {
  std::ostringstream out;
  out << "layers,width,activation,val_metric,epochs,seconds\n";
  for (const auto& r : leaderboard)
    out << r.config.layers << ',' << r.config.width << ',' << to_string(r.config.activation)
        << ',' << fmt_g17(r.val_metric) << ',' << r.epochs << ',' << fmt_g17(r.seconds) << '\n';
  return out.str();
}

SearchResult search(const SearchSpace& space, const ProblemSpec& spec, const TrainConfig& cfg,
                    const NasConfig& nas, const std::map<std::string, MlpSpec>& companion_nets) {
  using clock = std::chrono::steady_clock;
  const std::vector<CellConfig> cells = enumerate_cells(space);
  spec.validate();

  if (nas.criterion == NasConfig::Criterion::DataHoldout && spec.data_pool.rows() < 2)
    throw NasError(NasError::Kind::NoValidationData,
                   "held-out criterion needs a labeled data pool of 2+ rows");
  if (nas.criterion == NasConfig::Criterion::Residual && spec.n_collocation <= 0)
    throw NasError(NasError::Kind::NoValidationData,
                   "residual criterion needs collocation points");

  TrainConfig run_cfg = cfg;
  run_cfg.epochs = nas.budget_epochs;
  run_cfg.validation.kind = nas.criterion == NasConfig::Criterion::DataHoldout
                                ? ValidationSpec::Kind::DataHoldout
                                : ValidationSpec::Kind::Residual;
  run_cfg.validation.fraction = nas.holdout_fraction;
  run_cfg.early_stop_every = nas.early_stop ? nas.check_every : 0;
  run_cfg.early_stop_patience = nas.patience;
  run_cfg.early_stop_rel = nas.min_rel_improvement;

  const std::string primary = spec.symbols.primary_vars.at(0);
  const int input_dim = int(spec.independent_names().size());

  SearchResult out;
  out.criterion = nas.criterion;
  out.leaderboard.reserve(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    MlpSpec ms;
    ms.input_dim = input_dim;
    ms.hidden_layers = cells[i].layers;
    ms.hidden_width = cells[i].width;
    ms.output_dim = 1;
    ms.activation = cells[i].activation;
    std::map<std::string, MlpSpec> nets = companion_nets;
    nets[primary] = ms;

    const auto t0 = clock::now();
    const TrainResult r = train(spec, nets, run_cfg);
    CellResult cr;
    cr.config = cells[i];
    cr.enum_index = i;
    cr.epochs = long(r.history.rows.size());
    cr.val_metric = r.history.rows.empty() ? std::numeric_limits<double>::infinity()
                                           : r.history.rows.back().val_metric;
    cr.seconds = std::chrono::duration<double>(clock::now() - t0).count();
    out.leaderboard.push_back(cr);
  }

  std::sort(out.leaderboard.begin(), out.leaderboard.end(),
            [](const CellResult& a, const CellResult& b) {
              const double ma = std::isnan(a.val_metric)
                                    ? std::numeric_limits<double>::infinity()
                                    : a.val_metric;
              const double mb = std::isnan(b.val_metric)
                                    ? std::numeric_limits<double>::infinity()
                                    : b.val_metric;
              if (ma != mb) return ma < mb;
              return a.enum_index < b.enum_index;
            });
  return out;
}

} // namespace pde_embed
