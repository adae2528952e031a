#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "pde_embed/mlp.hpp"
#include "pde_embed/rng.hpp"

using namespace pde_embed;

TEST_CASE("parameter count formula") {
  MlpSpec tiny{1, 1, 1, 1, ActivationKind::Tanh};
  CHECK(tiny.parameter_count() == 4); // W0, b0, W1, b1

  Rng rng(303);
  for (int i = 0; i < 40; ++i) {
    MlpSpec s;
    s.input_dim = 1 + int(rng.next_u64() % 5);
    s.hidden_layers = 1 + int(rng.next_u64() % 6);
    s.hidden_width = 1 + int(rng.next_u64() % 40);
    s.output_dim = 1 + int(rng.next_u64() % 3);
    std::size_t expect = 0;
    for (int l = 0; l < s.affine_count(); ++l)
      expect += std::size_t(s.fan_in(l)) * s.fan_out(l) + s.fan_out(l);
    CHECK(s.parameter_count() == expect);
    CHECK(init(s, 7).flat.size() == expect);
  }
}

TEST_CASE("spec validation rejects nonpositive dims") {
  MlpSpec bad{0, 1, 1, 1, ActivationKind::Tanh};
  CHECK_THROWS_AS(bad.validate(), MlpError);
  bad = {1, 0, 1, 1, ActivationKind::Tanh};
  CHECK_THROWS_AS(bad.validate(), MlpError);
  bad = {1, 1, -2, 1, ActivationKind::Tanh};
  CHECK_THROWS_AS(bad.validate(), MlpError);
}

TEST_CASE("init is deterministic and Glorot-bounded") {
  MlpSpec s{2, 3, 16, 1, ActivationKind::Tanh};
  auto a = init(s, 42);
  auto b = init(s, 42);
  CHECK(a.flat == b.flat);
  auto c = init(s, 43);
  CHECK(a.flat != c.flat);

  // Biases start at zero, weights inside the Glorot-uniform bound.
  for (int l = 0; l < s.affine_count(); ++l) {
    double bound = std::sqrt(6.0 / (s.fan_in(l) + s.fan_out(l)));
    for (int i = 0; i < s.fan_in(l) * s.fan_out(l); ++i) {
      CHECK(std::abs(a.W(l)[i]) <= bound);
    }
    for (int i = 0; i < s.fan_out(l); ++i) CHECK(a.b(l)[i] == 0.0);
  }

  // Normalization maps default to identity.
  CHECK(a.in_scale == std::vector<double>{1.0, 1.0});
  CHECK(a.in_shift == std::vector<double>{0.0, 0.0});
  CHECK(a.out_scale == std::vector<double>{1.0});
  CHECK(a.out_shift == std::vector<double>{0.0});
}

TEST_CASE("weight sample mean is consistent with a zero-mean uniform draw") {
  MlpSpec s{10, 1, 100, 10, ActivationKind::Tanh};
  double sum = 0;
  std::size_t n = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto p = init(s, seed);
    for (int l = 0; l < s.affine_count(); ++l) {
      const int cnt = s.fan_in(l) * s.fan_out(l);
      sum = std::accumulate(p.W(l), p.W(l) + cnt, sum);
      n += cnt;
    }
  }
  CHECK(n >= 100000);
  // var of U(-a,a) is a^2/3; the widest layer bound dominates.
  double a_max = std::sqrt(6.0 / (100 + 100));
  double sigma = a_max / std::sqrt(3.0);
  CHECK(std::abs(sum / double(n)) <= 3 * sigma / std::sqrt(double(n)));
}

TEST_CASE("forward with all-zero parameters returns the output shift") {
  MlpSpec s{2, 2, 8, 1, ActivationKind::Tanh};
  auto p = init(s, 1);
  std::fill(p.flat.begin(), p.flat.end(), 0.0);
  p.out_shift = {3.25};
  std::vector<double> x = {0.0, 0.0, 1.0, -2.0, 5.0, 5.0};
  auto y = forward(p, x);
  REQUIRE(y.size() == 3);
  for (double v : y) CHECK(v == 3.25);
}

TEST_CASE("hand-sized softplus network") {
  MlpSpec s{1, 1, 1, 1, ActivationKind::Softplus};
  auto p = init(s, 0);
  p.flat = {1.0, 0.0, 1.0, 0.0}; // W0=1 b0=0 W1=1 b1=0
  auto y = forward(p, std::vector<double>{0.0});
  REQUIRE(y.size() == 1);
  CHECK(y[0] == doctest::Approx(std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("batch order equivariance") {
  MlpSpec s{3, 2, 10, 2, ActivationKind::GeLU};
  auto p = init(s, 9);
  Rng rng(10);
  std::vector<double> x(5 * 3);
  for (auto& v : x) v = rng.uniform(-2, 2);
  auto y = forward(p, x);
  // Reversed batch gives the reversed outputs, bitwise.
  std::vector<double> xr(x.size()), expect(y.size());
  for (int i = 0; i < 5; ++i) {
    std::copy(&x[3 * i], &x[3 * i] + 3, &xr[3 * (4 - i)]);
    std::copy(&y[2 * i], &y[2 * i] + 2, &expect[2 * (4 - i)]);
  }
  CHECK(forward(p, xr) == expect);
}

TEST_CASE("normalization maps wrap the raw network affinely") {
  MlpSpec s{1, 1, 6, 1, ActivationKind::Tanh};
  auto raw = init(s, 21);
  auto mapped = raw;
  mapped.in_scale = {2.0};
  mapped.in_shift = {1.0};
  mapped.out_scale = {10.0};
  mapped.out_shift = {-5.0};
  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    double x = rng.uniform(-4, 4);
    double z = (x - 1.0) / 2.0;
    double y_raw = forward(raw, std::vector<double>{z})[0];
    double y_map = forward(mapped, std::vector<double>{x})[0];
    CHECK(y_map == doctest::Approx(10.0 * y_raw - 5.0).epsilon(1e-15));
  }
}

TEST_CASE("params validation") {
  MlpSpec s{2, 1, 4, 1, ActivationKind::Tanh};
  auto p = init(s, 0);
  CHECK_NOTHROW(p.validate());
  auto bad = p;
  bad.flat.pop_back();
  CHECK_THROWS_AS(bad.validate(), MlpError);
  bad = p;
  bad.in_scale[0] = 0.0;
  CHECK_THROWS_AS(bad.validate(), MlpError);
}

TEST_CASE("non-finite propagation names the layer") {
  MlpSpec s{1, 1, 2, 1, ActivationKind::ReLU};
  auto p = init(s, 0);
  p.flat[0] = std::numeric_limits<double>::infinity();
  try {
    forward(p, std::vector<double>{1.0});
    FAIL("expected NonFiniteOutput");
  } catch (const MlpError& e) {
    CHECK(e.kind == MlpError::Kind::NonFiniteOutput);
    CHECK(e.layer == 0);
  }
}

TEST_CASE("network bank lookup") {
  NetworkBank bank;
  CHECK(bank.find("u") == -1);
  MlpSpec s{2, 1, 4, 1, ActivationKind::Tanh};
  NetworkEntry e{"u", NetworkRole::Primary, init(s, 1)};
  int iu = bank.add(e);
  e.name = "K";
  e.role = NetworkRole::FittedField;
  int ik = bank.add(e);
  CHECK(bank.find("u") == iu);
  CHECK(bank.find("K") == ik);
  CHECK(bank.total_parameters() == 2 * s.parameter_count());
  CHECK(to_string(NetworkRole::FittedField) == "fitted_field");
  CHECK(network_role_from_string("primary") == NetworkRole::Primary);
}
