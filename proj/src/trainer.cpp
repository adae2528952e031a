#include "pde_embed/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "pde_embed/optimize.hpp"
#include "pde_embed/rng.hpp"
#include "pde_embed/util.hpp"

namespace pde_embed {

namespace {

std::vector<std::size_t> shuffled_indices(std::size_t n, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t(0));
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const std::size_t j = i + std::size_t(rng.uniform() * double(n - i));
    std::swap(idx[i], idx[std::min(j, n - 1)]);
  }
  return idx;
}

PointTable take_rows(const PointTable& t, const std::vector<std::size_t>& order, std::size_t lo,
                     std::size_t hi) {
  PointTable out;
  out.names = t.names;
  out.cols.resize(t.cols.size());
  for (auto& c : out.cols) c.reserve(hi - lo);
  if (!t.target.empty()) out.target.reserve(hi - lo);
  for (std::size_t r = lo; r < hi; ++r) {
    const std::size_t src = order[r];
    for (std::size_t a = 0; a < t.cols.size(); ++a) out.cols[a].push_back(t.cols[a][src]);
    if (!t.target.empty()) out.target.push_back(t.target[src]);
  }
  return out;
}

// One shuffle stream per set per epoch, all derived from the run seed.
struct SetShuffle {
  const PointTable* table;
  std::string tag;
  std::vector<std::size_t> order;
};

struct Batcher {
  std::vector<SetShuffle> sets;
  std::size_t nb = 1;

  Batcher(const PointSets& pts, std::size_t batch_size) {
    sets.push_back({&pts.collocation, "collocation", {}});
    sets.push_back({&pts.initial, "initial", {}});
    sets.push_back({&pts.dirichlet, "dirichlet", {}});
    for (std::size_t s = 0; s < pts.neumann.size(); ++s)
      sets.push_back({&pts.neumann[s], "neumann:" + std::to_string(s), {}});
    for (std::size_t s = 0; s < pts.periodic.size(); ++s)
      sets.push_back({&pts.periodic[s], "periodic:" + std::to_string(s), {}});
    sets.push_back({&pts.data, "data", {}});
    sets.push_back({&pts.coeff, "coeff", {}});
    const std::size_t nc = pts.collocation.rows();
    nb = (batch_size == 0 || nc == 0) ? 1 : (nc + batch_size - 1) / batch_size;
  }

  void reshuffle(std::uint64_t seed, long epoch) {
    for (auto& s : sets) {
      Rng rng(Rng::derive(seed, "shuffle:" + s.tag + ":" + std::to_string(epoch)));
      s.order = shuffled_indices(s.table->rows(), rng);
    }
  }

  // Proportional joint slice: set s contributes rows
  // [floor(k N_s / nb), floor((k+1) N_s / nb)).
  PointSets batch(const PointSets& pts, std::size_t k) const {
    PointSets out;
    std::size_t si = 0;
    auto next = [&](const PointTable& t) {
      const auto& order = sets[si++].order;
      const std::size_t n = t.rows();
      return take_rows(t, order, k * n / nb, (k + 1) * n / nb);
    };
    out.collocation = next(pts.collocation);
    out.initial = next(pts.initial);
    out.dirichlet = next(pts.dirichlet);
    for (const auto& t : pts.neumann) out.neumann.push_back(next(t));
    for (const auto& t : pts.periodic) out.periodic.push_back(next(t));
    out.data = next(pts.data);
    out.coeff = next(pts.coeff);
    return out;
  }
};

void add_terms(LossTerms& acc, const LossTerms& t) {
  acc.l_r += t.l_r;
  acc.l_ic += t.l_ic;
  acc.l_bc += t.l_bc;
  acc.l_data += t.l_data;
  acc.l_k += t.l_k;
}

LossTerms scale_terms(const LossTerms& t, double s) {
  return {t.l_r * s, t.l_ic * s, t.l_bc * s, t.l_data * s, t.l_k * s};
}

std::vector<double> flatten_grads(const std::vector<std::vector<double>>& grads) {
  std::vector<double> out;
  for (const auto& g : grads) out.insert(out.end(), g.begin(), g.end());
  return out;
}

// Splits the labeled pool into a training remainder and a held-out table.
void split_holdout(ProblemSpec& spec, double fraction, std::uint64_t seed, PointTable& holdout) {
  const std::size_t n = spec.data_pool.rows();
  if (n < 2) throw std::invalid_argument("holdout validation needs a labeled pool of 2+ rows");
  std::size_t nv = std::size_t(std::llround(fraction * double(n)));
  nv = std::min(std::max<std::size_t>(nv, 1), n - 1);
  Rng rng(Rng::derive(seed, "validation:holdout"));
  std::vector<std::size_t> order = shuffled_indices(n, rng);
  std::vector<std::size_t> val(order.begin(), order.begin() + long(nv));
  std::vector<std::size_t> keep(order.begin() + long(nv), order.end());
  std::sort(val.begin(), val.end());
  std::sort(keep.begin(), keep.end());
  const PointTable pool = spec.data_pool;
  auto gather = [&](const std::vector<std::size_t>& rows) {
    PointTable t;
    t.names = pool.names;
    t.cols.resize(pool.cols.size());
    for (std::size_t a = 0; a < pool.cols.size(); ++a)
      for (std::size_t r : rows) t.cols[a].push_back(pool.cols[a][r]);
    for (std::size_t r : rows) t.target.push_back(pool.target[r]);
    return t;
  };
  holdout = gather(val);
  spec.data_pool = gather(keep);
}

TrainResult run_loop(std::unique_ptr<CompiledProblem> cp, const TrainConfig& cfg,
                     const PointTable& holdout) {
  using clock = std::chrono::steady_clock;
  const ProblemSpec& spec = cp->spec;

  const PointSets pts = sample_points(spec, cfg.seed);
  Batcher batcher(pts, cfg.batch_size);

  MultiplierState mult;
  mult.strategy = cfg.multipliers;
  AdamState adam = AdamState::for_bank(cp->bank, cfg.lr);

  TrainHistory hist;
  hist.rows.reserve(std::size_t(std::max<long>(cfg.epochs, 0)));

  const bool early = cfg.early_stop_every > 0 && cfg.validation.kind != ValidationSpec::Kind::None;
  double best_metric = std::numeric_limits<double>::infinity();
  int stale_checks = 0;

  for (long e = 0; e < cfg.epochs; ++e) {
    const auto t0 = clock::now();
    batcher.reshuffle(cfg.seed, e);
    LossTerms sum;
    double total_sum = 0;
    for (std::size_t k = 0; k < batcher.nb; ++k) {
      const PointSets bpts = batcher.batch(pts, k);
      TermGrad tg = total_loss_and_grad(*cp, bpts, mult);
      adam_step(adam, cp->bank, tg.grads);
      add_terms(sum, tg.terms);
      total_sum += tg.total;
    }
    const LossTerms mean = scale_terms(sum, 1.0 / double(batcher.nb));
    switch (cfg.multipliers.kind) {
      case MultiplierStrategy::Kind::Step: update_multipliers(mult, sum); break;
      default: update_multipliers(mult, mean); break;
    }

    EpochRow row;
    row.epoch = e + 1;
    row.terms = mean;
    row.lambda_r = mult.lambda_r;
    row.lambda_k = mult.lambda_k;
    row.total = total_sum / double(batcher.nb);
    if (cfg.validation.kind == ValidationSpec::Kind::Residual)
      row.val_metric = residual_mse(*cp, pts.collocation);
    else if (cfg.validation.kind == ValidationSpec::Kind::DataHoldout)
      row.val_metric = data_mse(*cp, holdout);
    row.seconds = std::chrono::duration<double>(clock::now() - t0).count();
    hist.rows.push_back(row);

    if (cfg.log_every > 0 && (e + 1) % cfg.log_every == 0)
      std::printf("epoch %ld  total %.6e  L_r %.3e  lambda_r %.3f\n", e + 1, row.total,
                  mean.l_r, mult.lambda_r);

    if (early && (e + 1) % cfg.early_stop_every == 0) {
      const double m = row.val_metric;
      if (std::isfinite(m) && m < best_metric * (1.0 - cfg.early_stop_rel)) {
        best_metric = m;
        stale_checks = 0;
      } else {
        ++stale_checks;
      }
      if (stale_checks >= cfg.early_stop_patience) break;
    }
  }

  if (cfg.lbfgs && cfg.lbfgs_iterations > 0 && cfg.epochs > 0) {
    auto fg = [&](const std::vector<double>& x, std::vector<double>& grad) {
      scatter_params(cp->bank, x);
      TermGrad tg = total_loss_and_grad(*cp, pts, mult);
      grad = flatten_grads(tg.grads);
      return tg.total;
    };
    LbfgsResult res = lbfgs_refine(gather_params(cp->bank), fg, cfg.lbfgs_iterations,
                                   cfg.lbfgs_memory);
    scatter_params(cp->bank, res.x);
    hist.lbfgs_ran = true;
    hist.lbfgs_iterations = res.iterations;
    hist.lbfgs_converged = res.converged;
    hist.lbfgs_line_search_failed = res.line_search_failed;
  }

  TrainResult out;
  out.ckpt.bank = cp->bank;
  out.ckpt.multipliers = mult;
  out.ckpt.adam = std::move(adam);
  out.ckpt.seed = cfg.seed;
  out.ckpt.problem = spec.name;
  out.ckpt.epochs = cfg.epochs;
  out.ckpt.final_terms = loss_terms(*cp, pts);
  out.history = std::move(hist);
  return out;
}

} // namespace

std::string TrainHistory::to_csv() const {
  std::ostringstream out;
  out << "epoch,L_r,L_IC,L_BC,L_Data,L_K,lambda_r,lambda_K,total,val_metric,seconds\n";
  for (const auto& r : rows) {
    out << r.epoch << ',' << fmt_g17(r.terms.l_r) << ',' << fmt_g17(r.terms.l_ic) << ','
        << fmt_g17(r.terms.l_bc) << ',' << fmt_g17(r.terms.l_data) << ',' << fmt_g17(r.terms.l_k)
        << ',' << fmt_g17(r.lambda_r) << ',' << fmt_g17(r.lambda_k) << ',' << fmt_g17(r.total)
        << ',' << (std::isnan(r.val_metric) ? std::string() : fmt_g17(r.val_metric)) << ','
        << fmt_g17(r.seconds) << '\n';
  }
  return out.str();
}

TrainResult train(const ProblemSpec& spec, const std::map<std::string, MlpSpec>& net_specs,
                  const TrainConfig& cfg) {
  ProblemSpec s = spec;
  PointTable holdout;
  if (cfg.validation.kind == ValidationSpec::Kind::DataHoldout)
    split_holdout(s, cfg.validation.fraction, cfg.seed, holdout);
  auto cp = compile(s, net_specs, cfg.seed);
  return run_loop(std::move(cp), cfg, holdout);
}

TrainResult train_from(const ProblemSpec& spec, NetworkBank bank, const TrainConfig& cfg) {
  ProblemSpec s = spec;
  PointTable holdout;
  if (cfg.validation.kind == ValidationSpec::Kind::DataHoldout)
    split_holdout(s, cfg.validation.fraction, cfg.seed, holdout);
  auto cp = compile_with(s, std::move(bank));
  return run_loop(std::move(cp), cfg, holdout);
}

} // namespace pde_embed
