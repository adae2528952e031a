#include "pde_embed/activation.hpp"

#include <cmath>

namespace pde_embed {

ActivationKind activation_from_string(const std::string& name) {
  if (name == "tanh") return ActivationKind::Tanh;
  if (name == "relu") return ActivationKind::ReLU;
  if (name == "gelu") return ActivationKind::GeLU;
  if (name == "softplus") return ActivationKind::Softplus;
  throw ActivationError(ActivationError::Kind::UnknownName, "unknown activation '" + name + "'");
}

std::string to_string(ActivationKind k) {
  switch (k) {
    case ActivationKind::Tanh: return "tanh";
    case ActivationKind::ReLU: return "relu";
    case ActivationKind::GeLU: return "gelu";
    case ActivationKind::Softplus: return "softplus";
  }
  return "?";
}

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

inline void tanh_table(double x, int order, double* out) {
  const double t = std::tanh(x);
  const double s = 1.0 - t * t;
  out[0] = t;
  if (order >= 1) out[1] = s;
  if (order >= 2) out[2] = -2.0 * t * s;
  if (order >= 3) out[3] = s * (6.0 * t * t - 2.0);
  if (order >= 4) out[4] = s * (16.0 * t - 24.0 * t * t * t);
}

inline void relu_table(double x, int order, double* out) {
  const bool on = x > 0.0;
  out[0] = on ? x : 0.0;
  if (order >= 1) out[1] = on ? 1.0 : 0.0;
  for (int d = 2; d <= order; ++d) out[d] = 0.0;
}

inline void softplus_table(double x, int order, double* out) {
  // log(1 + e^x) computed from the side that keeps the exponent negative.
  out[0] = x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
  if (order < 1) return;
  const double sg = x > 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  const double sp = sg * (1.0 - sg);
  out[1] = sg;
  if (order >= 2) out[2] = sp;
  if (order >= 3) out[3] = sp * (1.0 - 2.0 * sg);
  if (order >= 4) out[4] = sp * (1.0 - 6.0 * sg + 6.0 * sg * sg);
}

inline void gelu_table(double x, int order, double* out) {
  const double Phi = 0.5 * std::erfc(-x * kInvSqrt2);
  const double phi = kInvSqrt2Pi * std::exp(-0.5 * x * x);
  out[0] = x * Phi;
  if (order >= 1) out[1] = Phi + x * phi;
  if (order >= 2) out[2] = phi * (2.0 - x * x);
  if (order >= 3) out[3] = phi * (x * x * x - 4.0 * x);
  if (order >= 4) out[4] = phi * (-x * x * x * x + 7.0 * x * x - 4.0);
}

inline void table(ActivationKind k, double x, int order, double* out) {
  switch (k) {
    case ActivationKind::Tanh: tanh_table(x, order, out); break;
    case ActivationKind::ReLU: relu_table(x, order, out); break;
    case ActivationKind::GeLU: gelu_table(x, order, out); break;
    case ActivationKind::Softplus: softplus_table(x, order, out); break;
  }
}

} // namespace

double activation_derivatives(ActivationKind k, double x, int order) {
  if (order < 0 || order > 3)
    throw ActivationError(ActivationError::Kind::OrderTooHigh,
                          "activation derivatives are available up to order 3, requested " +
                              std::to_string(order));
  double out[4];
  table(k, x, order, out);
  return out[order];
}

namespace detail {

void activation_table(ActivationKind k, double x, int order, double* out) {
  if (order < 0 || order > kMaxActOrder)
    throw ActivationError(ActivationError::Kind::OrderTooHigh,
                          "internal activation table capped at order " +
                              std::to_string(kMaxActOrder));
  table(k, x, order, out);
}

void activation_table_batch(ActivationKind k, const double* x, std::size_t n, int order,
                            double* out) {
  if (order < 0 || order > kMaxActOrder)
    throw ActivationError(ActivationError::Kind::OrderTooHigh,
                          "internal activation table capped at order " +
                              std::to_string(kMaxActOrder));
  const std::size_t stride = std::size_t(order) + 1;
  switch (k) {
    case ActivationKind::Tanh:
      for (std::size_t p = 0; p < n; ++p) tanh_table(x[p], order, out + p * stride);
      break;
    case ActivationKind::ReLU:
      for (std::size_t p = 0; p < n; ++p) relu_table(x[p], order, out + p * stride);
      break;
    case ActivationKind::GeLU:
      for (std::size_t p = 0; p < n; ++p) gelu_table(x[p], order, out + p * stride);
      break;
    case ActivationKind::Softplus:
      for (std::size_t p = 0; p < n; ++p) softplus_table(x[p], order, out + p * stride);
      break;
  }
}

} // namespace detail

} // namespace pde_embed
