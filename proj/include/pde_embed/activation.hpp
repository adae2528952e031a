#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pde_embed {

enum class ActivationKind { Tanh, ReLU, GeLU, Softplus };

struct ActivationError : std::runtime_error {
  enum class Kind { OrderTooHigh, UnknownName };
  Kind kind;
  ActivationError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

ActivationKind activation_from_string(const std::string& name);
std::string to_string(ActivationKind k);

// Value of the order-th derivative of the activation at x (order 0 is the
// value itself). Supported orders are 0 through 3; higher raises OrderTooHigh.
double activation_derivatives(ActivationKind k, double x, int order);

namespace detail {

// Gradients of third-order derivative outputs pull in one extra activation
// order, so the internal table extends to 4. Not part of the public surface.
constexpr int kMaxActOrder = 4;
void activation_table(ActivationKind k, double x, int order, double* out);

// Point-major batch layout: out[p * (order + 1) + d] = sigma^(d)(x[p]).
void activation_table_batch(ActivationKind k, const double* x, std::size_t n, int order,
                            double* out);

} // namespace detail

} // namespace pde_embed
