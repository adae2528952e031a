#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "pde_embed/problem.hpp"
#include "pde_embed/rng.hpp"

using namespace pde_embed;

namespace {

ProblemSpec spec_1d() {
  ProblemSpec s;
  s.name = "toy1d";
  s.residual = "diff(u,t) - diff(u,x,2)";
  s.symbols.primary_vars = {"u"};
  s.symbols.independent_vars = {"x", "t"};
  s.x_lo = 1;
  s.x_hi = 2;
  s.t_lo = 0;
  s.t_hi = 0.5;
  s.initial = "x * x";
  s.dirichlet = {{Side::XMin, "3"}, {Side::XMax, "t"}};
  s.n_collocation = 100;
  s.n_initial = 40;
  s.n_dirichlet = 7;
  return s;
}

ProblemSpec spec_2d() {
  ProblemSpec s;
  s.name = "toy2d";
  s.residual = "diff(u,t) - diff(u,x,2) - diff(u,y,2)";
  s.symbols.primary_vars = {"u"};
  s.symbols.independent_vars = {"x", "y", "t"};
  s.x_lo = 0;
  s.x_hi = 4;
  s.y_lo = 0;
  s.y_hi = 2;
  s.t_lo = 0;
  s.t_hi = 1;
  s.initial = "0";
  s.dirichlet = {{Side::XMin, "10"}, {Side::XMax, "5"}};
  s.neumann = {{Side::YMin, "diff(u,y)"}, {Side::YMax, "diff(u,y)"}};
  s.n_collocation = 50;
  s.n_initial = 20;
  s.n_dirichlet = 10;
  s.n_neumann = 9;
  return s;
}

bool tables_equal(const PointTable& a, const PointTable& b) {
  return a.names == b.names && a.cols == b.cols && a.target == b.target;
}

} // namespace

TEST_CASE("interior and initial sampling") {
  ProblemSpec s = spec_1d();
  PointSets p = sample_points(s, 42);

  CHECK(p.collocation.rows() == 100);
  CHECK(p.collocation.names == std::vector<std::string>{"x", "t"});
  for (std::size_t r = 0; r < 100; ++r) {
    CHECK(p.collocation.cols[0][r] >= 1.0);
    CHECK(p.collocation.cols[0][r] < 2.0);
    CHECK(p.collocation.cols[1][r] >= 0.0);
    CHECK(p.collocation.cols[1][r] < 0.5);
  }

  CHECK(p.initial.rows() == 40);
  for (std::size_t r = 0; r < 40; ++r) {
    CHECK(p.initial.cols[1][r] == 0.0); // pinned to t_lo
    double x = p.initial.cols[0][r];
    CHECK(p.initial.target[r] == doctest::Approx(x * x).epsilon(1e-15));
  }
}

TEST_CASE("boundary budget is shared across segments") {
  ProblemSpec s = spec_1d();
  PointSets p = sample_points(s, 7);

  // 7 points over two segments: 4 on the first, 3 on the second.
  CHECK(p.dirichlet.rows() == 7);
  int n_lo = 0, n_hi = 0;
  for (std::size_t r = 0; r < 7; ++r) {
    double x = p.dirichlet.cols[0][r];
    double t = p.dirichlet.cols[1][r];
    if (x == 1.0) {
      ++n_lo;
      CHECK(p.dirichlet.target[r] == 3.0);
    } else {
      CHECK(x == 2.0);
      ++n_hi;
      CHECK(p.dirichlet.target[r] == t); // expression target
    }
  }
  CHECK(n_lo == 4);
  CHECK(n_hi == 3);
}

TEST_CASE("flux segments pin their side coordinate exactly") {
  ProblemSpec s = spec_2d();
  PointSets p = sample_points(s, 3);
  REQUIRE(p.neumann.size() == 2);
  CHECK(p.neumann[0].rows() == 5);
  CHECK(p.neumann[1].rows() == 4);
  for (std::size_t r = 0; r < p.neumann[0].rows(); ++r)
    CHECK(p.neumann[0].cols[1][r] == 0.0);
  for (std::size_t r = 0; r < p.neumann[1].rows(); ++r)
    CHECK(p.neumann[1].cols[1][r] == 2.0);
  for (std::size_t r = 0; r < p.neumann[0].rows(); ++r) {
    CHECK(p.neumann[0].cols[0][r] >= 0.0);
    CHECK(p.neumann[0].cols[0][r] < 4.0);
  }
}

TEST_CASE("periodic pairs draw from the boundary budget") {
  ProblemSpec s = spec_1d();
  s.dirichlet.clear();
  s.periodic = {{0}};
  s.n_dirichlet = 9;
  PointSets p = sample_points(s, 11);
  CHECK(p.dirichlet.rows() == 0);
  REQUIRE(p.periodic.size() == 1);
  const PointTable& t = p.periodic[0];
  CHECK(t.names == std::vector<std::string>{"__lo", "__hi", "t"});
  CHECK(t.rows() == 9);
  for (std::size_t r = 0; r < 9; ++r) {
    CHECK(t.cols[0][r] == 1.0);
    CHECK(t.cols[1][r] == 2.0);
    CHECK(t.cols[2][r] >= 0.0);
    CHECK(t.cols[2][r] < 0.5);
  }

  // With a Dirichlet segment alongside, the budget splits between the two.
  s.dirichlet = {{Side::XMin, "0"}};
  PointSets q = sample_points(s, 11);
  CHECK(q.dirichlet.rows() == 5);
  CHECK(q.periodic[0].rows() == 4);
}

TEST_CASE("pool subsampling draws without replacement") {
  ProblemSpec s = spec_1d();
  s.data_pool.names = {"x", "t"};
  s.data_pool.cols = {{}, {}};
  for (int i = 0; i < 30; ++i) {
    s.data_pool.cols[0].push_back(1.0 + i * 0.01);
    s.data_pool.cols[1].push_back(0.25);
    s.data_pool.target.push_back(i * 10.0);
  }
  s.n_data = 12;
  PointSets p = sample_points(s, 5);
  CHECK(p.data.rows() == 12);
  std::set<double> seen;
  for (std::size_t r = 0; r < 12; ++r) {
    double x = p.data.cols[0][r];
    CHECK(seen.insert(x).second); // no repeats
    // Target rides along with its row.
    double i = std::round((x - 1.0) / 0.01);
    CHECK(p.data.target[r] == doctest::Approx(i * 10.0));
  }

  // Asking for more than the pool holds returns the whole pool.
  s.n_data = 100;
  PointSets q = sample_points(s, 5);
  CHECK(q.data.rows() == 30);
}

TEST_CASE("sampling is deterministic per seed") {
  ProblemSpec s = spec_2d();
  PointSets a = sample_points(s, 99);
  PointSets b = sample_points(s, 99);
  PointSets c = sample_points(s, 100);
  CHECK(tables_equal(a.collocation, b.collocation));
  CHECK(tables_equal(a.initial, b.initial));
  CHECK(tables_equal(a.dirichlet, b.dirichlet));
  CHECK(tables_equal(a.neumann[0], b.neumann[0]));
  CHECK_FALSE(tables_equal(a.collocation, c.collocation));
}

TEST_CASE("sampling errors and validation") {
  SUBCASE("boundary points without any boundary") {
    ProblemSpec s = spec_1d();
    s.dirichlet.clear();
    CHECK_THROWS_AS(sample_points(s, 1), SamplingError);
  }
  SUBCASE("flux points without flux segments") {
    ProblemSpec s = spec_1d();
    s.n_neumann = 3;
    CHECK_THROWS_AS(sample_points(s, 1), SamplingError);
  }
  SUBCASE("data points from an empty pool") {
    ProblemSpec s = spec_1d();
    s.n_data = 1;
    CHECK_THROWS_AS(sample_points(s, 1), SamplingError);
  }
  SUBCASE("zero counts with empty pools are fine") {
    ProblemSpec s = spec_1d();
    PointSets p = sample_points(s, 1);
    CHECK(p.data.rows() == 0);
    CHECK(p.coeff.rows() == 0);
  }
  SUBCASE("y-side segment rejected on 1D domains") {
    ProblemSpec s = spec_1d();
    s.dirichlet.push_back({Side::YMin, "0"});
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  }
  SUBCASE("periodic y axis rejected on 1D domains") {
    ProblemSpec s = spec_1d();
    s.periodic = {{1}};
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  }
  SUBCASE("initial points need an initial state") {
    ProblemSpec s = spec_1d();
    s.initial.clear();
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  }
  SUBCASE("negative counts rejected") {
    ProblemSpec s = spec_1d();
    s.n_collocation = -1;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  }
}

TEST_CASE("gridded initial state interpolates the frame") {
  ProblemSpec s = spec_2d();
  GridField g = GridField::make(9, 9, 1);
  g.dx = 0.5;
  g.dy = 0.25;
  g.x0 = 0.0;
  g.y0 = 0.0;
  // Bilinear interpolation reproduces an affine field exactly.
  for (int iy = 0; iy < 9; ++iy)
    for (int ix = 0; ix < 9; ++ix)
      g.values[g.index(ix, iy, 0)] = 2.0 * g.x(ix) - 3.0 * g.y(iy) + 1.0;
  s.initial.clear();
  s.initial_grid = g;
  PointSets p = sample_points(s, 21);
  REQUIRE(p.initial.rows() == 20);
  for (std::size_t r = 0; r < 20; ++r) {
    double x = p.initial.cols[0][r];
    double y = p.initial.cols[1][r];
    CHECK(p.initial.target[r] == doctest::Approx(2.0 * x - 3.0 * y + 1.0).epsilon(1e-12));
  }
}

TEST_CASE("point table validation") {
  PointTable t;
  t.names = {"x", "t"};
  t.cols = {{1.0, 2.0}, {0.5, 0.5}};
  CHECK_NOTHROW(t.validate());
  t.cols[1].pop_back();
  CHECK_THROWS(t.validate());
  t.cols[1] = {0.5, std::nan("")};
  CHECK_THROWS(t.validate());
}

TEST_CASE("closed-form expression evaluation") {
  std::vector<double> xs = {1.0, 2.0, 3.0};
  std::vector<double> ts = {0.0, 0.5, 1.0};
  auto v = evaluate_expression("2 * x + t", {"x", "t"}, {&xs, &ts});
  REQUIRE(v.size() == 3);
  CHECK(v[0] == 2.0);
  CHECK(v[1] == 4.5);
  CHECK(v[2] == 7.0);
}
