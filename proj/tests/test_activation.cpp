#include <doctest.h>

#include <cmath>
#include <vector>

#include "pde_embed/activation.hpp"
#include "pde_embed/rng.hpp"

using namespace pde_embed;

namespace {
const ActivationKind kAll[] = {ActivationKind::Tanh, ActivationKind::ReLU,
                               ActivationKind::GeLU, ActivationKind::Softplus};
}

TEST_CASE("name round trip") {
  for (auto k : kAll) CHECK(activation_from_string(to_string(k)) == k);
  CHECK(activation_from_string("tanh") == ActivationKind::Tanh);
  CHECK(activation_from_string("gelu") == ActivationKind::GeLU);
  CHECK_THROWS_AS(activation_from_string("swish"), ActivationError);
  try {
    activation_from_string("swish");
  } catch (const ActivationError& e) {
    CHECK(e.kind == ActivationError::Kind::UnknownName);
  }
}

TEST_CASE("closed-form spot values") {
  CHECK(activation_derivatives(ActivationKind::Tanh, 0.0, 0) == 0.0);
  CHECK(activation_derivatives(ActivationKind::Tanh, 0.0, 1) == 1.0);
  CHECK(activation_derivatives(ActivationKind::ReLU, 5.0, 0) == 5.0);
  CHECK(activation_derivatives(ActivationKind::ReLU, 5.0, 1) == 1.0);
  CHECK(activation_derivatives(ActivationKind::ReLU, 5.0, 2) == 0.0);
  CHECK(activation_derivatives(ActivationKind::ReLU, -2.0, 0) == 0.0);
  CHECK(activation_derivatives(ActivationKind::ReLU, -2.0, 1) == 0.0);
  // Subgradient at the kink is pinned to 0.
  CHECK(activation_derivatives(ActivationKind::ReLU, 0.0, 1) == 0.0);
  CHECK(activation_derivatives(ActivationKind::Softplus, 0.0, 0) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(activation_derivatives(ActivationKind::Softplus, 0.0, 1) == doctest::Approx(0.5));
  CHECK(activation_derivatives(ActivationKind::GeLU, 0.0, 0) == 0.0);
  // GeLU(x) = x Phi(x): slope approaches 1 far to the right.
  CHECK(std::abs(activation_derivatives(ActivationKind::GeLU, 10.0, 1) - 1.0) <= 1e-6);
  CHECK(activation_derivatives(ActivationKind::GeLU, 10.0, 0) ==
        doctest::Approx(10.0).epsilon(1e-9));
}

TEST_CASE("tanh derivative identities") {
  Rng rng(11);
  for (int i = 0; i < 50; ++i) {
    double x = rng.uniform(-3.0, 3.0);
    double t = std::tanh(x);
    CHECK(activation_derivatives(ActivationKind::Tanh, x, 1) ==
          doctest::Approx(1 - t * t).epsilon(1e-14));
    CHECK(activation_derivatives(ActivationKind::Tanh, x, 2) ==
          doctest::Approx(-2 * t * (1 - t * t)).epsilon(1e-13));
    CHECK(activation_derivatives(ActivationKind::Tanh, x, 3) ==
          doctest::Approx((6 * t * t - 2) * (1 - t * t)).epsilon(1e-12));
  }
}

TEST_CASE("each order is the numerical derivative of the previous one") {
  Rng rng(77);
  const double h = 1e-6;
  for (auto k : kAll) {
    for (int order = 1; order <= 3; ++order) {
      for (int i = 0; i < 50; ++i) {
        double x = rng.uniform(-3.0, 3.0);
        // Keep clear of the ReLU kink where the derivative jumps.
        if (k == ActivationKind::ReLU && std::abs(x) < 0.05) x += 0.1;
        double fd = (activation_derivatives(k, x + h, order - 1) -
                     activation_derivatives(k, x - h, order - 1)) /
                    (2 * h);
        double sym = activation_derivatives(k, x, order);
        double rel = std::abs(fd - sym) / std::max(1.0, std::abs(sym));
        CHECK(rel <= 1e-6);
      }
    }
  }
}

TEST_CASE("orders above three raise") {
  for (auto k : kAll) {
    CHECK_THROWS_AS(activation_derivatives(k, 0.3, 4), ActivationError);
    try {
      activation_derivatives(k, 0.3, 4);
    } catch (const ActivationError& e) {
      CHECK(e.kind == ActivationError::Kind::OrderTooHigh);
    }
  }
}

TEST_CASE("internal table agrees with the scalar entry point") {
  Rng rng(5);
  std::vector<double> xs(16);
  for (auto& x : xs) x = rng.uniform(-2.5, 2.5);
  for (auto k : kAll) {
    double table[detail::kMaxActOrder + 1];
    for (double x : xs) {
      detail::activation_table(k, x, 3, table);
      for (int d = 0; d <= 3; ++d) CHECK(table[d] == activation_derivatives(k, x, d));
    }
    std::vector<double> batch(xs.size() * 4);
    detail::activation_table_batch(k, xs.data(), xs.size(), 3, batch.data());
    for (size_t p = 0; p < xs.size(); ++p)
      for (int d = 0; d <= 3; ++d)
        CHECK(batch[p * 4 + d] == activation_derivatives(k, xs[p], d));
  }
}
