#include <algorithm>
#include <numeric>
#include <string>

#include "pde_embed/problem.hpp"
#include "pde_embed/rng.hpp"

namespace pde_embed {

namespace {

struct AxisBox {
  // per independent variable: [lo, hi], or a pinned value when lo == hi
  std::vector<double> lo, hi;
};

AxisBox domain_box(const ProblemSpec& spec) {
  AxisBox b;
  b.lo = {spec.x_lo};
  b.hi = {spec.x_hi};
  if (spec.two_d()) {
    b.lo.push_back(spec.y_lo);
    b.hi.push_back(spec.y_hi);
  }
  b.lo.push_back(spec.t_lo);
  b.hi.push_back(spec.t_hi);
  return b;
}

/// Rows drawn uniformly inside the box, column by column within each row so
/// draw order is independent of column count elsewhere.
PointTable draw_box(const std::vector<std::string>& names, const AxisBox& box, int n,
                    uint64_t seed) {
  PointTable t;
  t.names = names;
  t.cols.assign(names.size(), {});
  for (auto& c : t.cols) c.reserve(n);
  Rng rng(seed);
  for (int r = 0; r < n; ++r)
    for (std::size_t a = 0; a < names.size(); ++a)
      t.cols[a].push_back(box.lo[a] == box.hi[a] ? box.lo[a] : rng.uniform(box.lo[a], box.hi[a]));
  return t;
}

void pin_side(AxisBox& box, const ProblemSpec& spec, Side side) {
  const int y_axis = 1; // only valid when two_d
  switch (side) {
    case Side::XMin: box.lo[0] = box.hi[0] = spec.x_lo; break;
    case Side::XMax: box.lo[0] = box.hi[0] = spec.x_hi; break;
    case Side::YMin: box.lo[y_axis] = box.hi[y_axis] = spec.y_lo; break;
    case Side::YMax: box.lo[y_axis] = box.hi[y_axis] = spec.y_hi; break;
  }
}

std::vector<const std::vector<double>*> col_ptrs(const PointTable& t) {
  std::vector<const std::vector<double>*> p;
  for (const auto& c : t.cols) p.push_back(&c);
  return p;
}

/// First `count` entries of a seeded shuffle of 0..n-1, returned ascending.
std::vector<std::size_t> pick_rows(std::size_t n, std::size_t count, uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t(0));
  Rng rng(seed);
  const std::size_t take = std::min(count, n);
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t j = i + std::size_t(rng.uniform() * double(n - i));
    std::swap(idx[i], idx[std::min(j, n - 1)]);
  }
  idx.resize(take);
  std::sort(idx.begin(), idx.end());
  return idx;
}

PointTable subsample(const PointTable& pool, int count, uint64_t seed, const char* what) {
  if (count > 0 && pool.rows() == 0)
    throw SamplingError(SamplingError::Kind::EmptyRegion,
                        std::string(what) + " requested but the pool is empty");
  PointTable t;
  t.names = pool.names;
  t.cols.assign(pool.names.size(), {});
  if (count <= 0) return t;
  const auto rows = pick_rows(pool.rows(), std::size_t(count), seed);
  for (std::size_t a = 0; a < pool.cols.size(); ++a) {
    t.cols[a].reserve(rows.size());
    for (std::size_t r : rows) t.cols[a].push_back(pool.cols[a][r]);
  }
  t.target.reserve(rows.size());
  for (std::size_t r : rows) t.target.push_back(pool.target[r]);
  return t;
}

int share(int total, int units, int i) { return total / units + (i < total % units ? 1 : 0); }

} // namespace

PointSets sample_points(const ProblemSpec& spec, std::uint64_t seed) {
  spec.validate();
  const std::vector<std::string> names = spec.independent_names();
  const AxisBox box = domain_box(spec);
  PointSets out;

  out.collocation =
      draw_box(names, box, spec.n_collocation, Rng::derive(seed, "points:collocation"));

  {
    AxisBox ic = box;
    const std::size_t t_axis = names.size() - 1;
    ic.lo[t_axis] = ic.hi[t_axis] = spec.t_lo;
    out.initial = draw_box(names, ic, spec.n_initial, Rng::derive(seed, "points:initial"));
    if (out.initial.rows() > 0)
      out.initial.target = initial_values(spec, names, col_ptrs(out.initial));
  }

  // Dirichlet segments and periodic pairs share the boundary-point budget.
  const int units = int(spec.dirichlet.size() + spec.periodic.size());
  if (spec.n_dirichlet > 0 && units == 0)
    throw SamplingError(SamplingError::Kind::EmptyRegion,
                        "boundary points requested but no Dirichlet segments or periodic pairs");
  out.dirichlet.names = names;
  out.dirichlet.cols.assign(names.size(), {});
  for (std::size_t s = 0; s < spec.dirichlet.size(); ++s) {
    AxisBox seg = box;
    pin_side(seg, spec, spec.dirichlet[s].side);
    PointTable t = draw_box(names, seg, share(spec.n_dirichlet, units, int(s)),
                            Rng::derive(seed, "points:dirichlet:" + std::to_string(s)));
    if (t.rows() > 0) {
      const auto vals = evaluate_expression(spec.dirichlet[s].value, names, col_ptrs(t));
      for (std::size_t a = 0; a < names.size(); ++a)
        out.dirichlet.cols[a].insert(out.dirichlet.cols[a].end(), t.cols[a].begin(),
                                     t.cols[a].end());
      out.dirichlet.target.insert(out.dirichlet.target.end(), vals.begin(), vals.end());
    }
  }

  for (std::size_t s = 0; s < spec.periodic.size(); ++s) {
    const PeriodicPair& pp = spec.periodic[s];
    std::vector<std::string> rest;
    AxisBox rbox;
    for (std::size_t a = 0; a < names.size(); ++a) {
      if (int(a) == pp.axis) continue;
      rest.push_back(names[a]);
      rbox.lo.push_back(box.lo[a]);
      rbox.hi.push_back(box.hi[a]);
    }
    PointTable t =
        draw_box(rest, rbox, share(spec.n_dirichlet, units, int(spec.dirichlet.size() + s)),
                 Rng::derive(seed, "points:periodic:" + std::to_string(s)));
    PointTable full;
    full.names = {"__lo", "__hi"};
    full.cols = {std::vector<double>(t.rows(), box.lo[pp.axis]),
                 std::vector<double>(t.rows(), box.hi[pp.axis])};
    for (std::size_t a = 0; a < rest.size(); ++a) {
      full.names.push_back(rest[a]);
      full.cols.push_back(std::move(t.cols[a]));
    }
    out.periodic.push_back(std::move(full));
  }

  if (spec.n_neumann > 0 && spec.neumann.empty())
    throw SamplingError(SamplingError::Kind::EmptyRegion,
                        "flux points requested but no Neumann segments");
  for (std::size_t s = 0; s < spec.neumann.size(); ++s) {
    AxisBox seg = box;
    pin_side(seg, spec, spec.neumann[s].side);
    out.neumann.push_back(draw_box(names, seg,
                                   share(spec.n_neumann, int(spec.neumann.size()), int(s)),
                                   Rng::derive(seed, "points:neumann:" + std::to_string(s))));
  }

  out.data = subsample(spec.data_pool, spec.n_data, Rng::derive(seed, "points:data"), "data");
  out.coeff = subsample(spec.coeff_pool, spec.n_coeff, Rng::derive(seed, "points:coeff"),
                        "coefficient measurements");
  return out;
}

} // namespace pde_embed
