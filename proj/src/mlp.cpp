#include "pde_embed/mlp.hpp"

#include <cmath>

#include "pde_embed/kernels.hpp"
#include "pde_embed/rng.hpp"

namespace pde_embed {

void MlpSpec::validate() const {
  if (input_dim < 1 || hidden_layers < 1 || hidden_width < 1 || output_dim < 1)
    throw MlpError(MlpError::Kind::BadSpec, "all network dimensions must be positive");
}

std::size_t MlpSpec::parameter_count() const {
  std::size_t total = 0;
  for (int l = 0; l < affine_count(); ++l)
    total += std::size_t(fan_in(l)) * fan_out(l) + fan_out(l);
  return total;
}

std::size_t MlpParams::w_offset(int layer) const {
  std::size_t off = 0;
  for (int l = 0; l < layer; ++l)
    off += std::size_t(spec.fan_in(l)) * spec.fan_out(l) + spec.fan_out(l);
  return off;
}

std::size_t MlpParams::b_offset(int layer) const {
  return w_offset(layer) + std::size_t(spec.fan_in(layer)) * spec.fan_out(layer);
}

void MlpParams::validate() const {
  spec.validate();
  if (flat.size() != spec.parameter_count())
    throw MlpError(MlpError::Kind::ShapeMismatch, "flat parameter vector length mismatch");
  if (in_scale.size() != std::size_t(spec.input_dim) || in_shift.size() != in_scale.size())
    throw MlpError(MlpError::Kind::ShapeMismatch, "input normalization map length mismatch");
  if (out_scale.size() != std::size_t(spec.output_dim) || out_shift.size() != out_scale.size())
    throw MlpError(MlpError::Kind::ShapeMismatch, "output normalization map length mismatch");
  for (double s : in_scale)
    if (s == 0.0) throw MlpError(MlpError::Kind::BadSpec, "input normalization scale is zero");
  for (double s : out_scale)
    if (s == 0.0) throw MlpError(MlpError::Kind::BadSpec, "output normalization scale is zero");
}

MlpParams init(const MlpSpec& spec, std::uint64_t seed) {
  spec.validate();
  MlpParams p;
  p.spec = spec;
  p.flat.assign(spec.parameter_count(), 0.0);
  p.in_scale.assign(spec.input_dim, 1.0);
  p.in_shift.assign(spec.input_dim, 0.0);
  p.out_scale.assign(spec.output_dim, 1.0);
  p.out_shift.assign(spec.output_dim, 0.0);
  Rng rng(seed);
  for (int l = 0; l < spec.affine_count(); ++l) {
    const int fi = spec.fan_in(l), fo = spec.fan_out(l);
    const double limit = std::sqrt(6.0 / (fi + fo));
    double* w = p.W(l);
    for (int i = 0; i < fo * fi; ++i) w[i] = rng.uniform(-limit, limit);
  }
  return p;
}

std::vector<double> forward(const MlpParams& params, const double* x, std::size_t n) {
  params.validate();
  const MlpSpec& s = params.spec;
  const int cols = int(n);

  // Column-major panel of normalized inputs, one batch element per column.
  std::vector<double> h(std::size_t(s.input_dim) * n);
  for (std::size_t c = 0; c < n; ++c)
    for (int d = 0; d < s.input_dim; ++d)
      h[c * s.input_dim + d] = (x[c * s.input_dim + d] - params.in_shift[d]) / params.in_scale[d];

  std::vector<double> z;
  for (int l = 0; l < s.affine_count(); ++l) {
    const int fi = s.fan_in(l), fo = s.fan_out(l);
    z.assign(std::size_t(fo) * n, 0.0);
    kernels::affine_forward(params.W(l), params.b(l), h.data(), z.data(), fo, fi, cols, 1);
    if (l < s.hidden_layers) {
      for (std::size_t i = 0; i < z.size(); ++i) {
        double t[1];
        detail::activation_table(s.activation, z[i], 0, t);
        z[i] = t[0];
      }
    }
    int bad = kernels::first_nonfinite(z.data(), int(z.size()));
    if (bad >= 0)
      throw MlpError(MlpError::Kind::NonFiniteOutput,
                     "non-finite output at affine layer " + std::to_string(l), l);
    h.swap(z);
  }

  std::vector<double> out(std::size_t(s.output_dim) * n);
  for (std::size_t c = 0; c < n; ++c)
    for (int d = 0; d < s.output_dim; ++d)
      out[c * s.output_dim + d] =
          params.out_scale[d] * h[c * s.output_dim + d] + params.out_shift[d];
  return out;
}

std::vector<double> forward(const MlpParams& params, const std::vector<double>& x_rows) {
  if (x_rows.size() % params.spec.input_dim != 0)
    throw MlpError(MlpError::Kind::ShapeMismatch, "input batch not a multiple of input_dim");
  return forward(params, x_rows.data(), x_rows.size() / params.spec.input_dim);
}

std::string to_string(NetworkRole r) {
  return r == NetworkRole::Primary ? "primary" : "fitted_field";
}

NetworkRole network_role_from_string(const std::string& s) {
  if (s == "primary") return NetworkRole::Primary;
  if (s == "fitted_field") return NetworkRole::FittedField;
  throw MlpError(MlpError::Kind::BadSpec, "unknown network role '" + s + "'");
}

int NetworkBank::find(const std::string& name) const {
  for (std::size_t i = 0; i < nets.size(); ++i)
    if (nets[i].name == name) return int(i);
  return -1;
}

int NetworkBank::add(NetworkEntry entry) {
  if (find(entry.name) >= 0)
    throw MlpError(MlpError::Kind::BadSpec, "duplicate network name '" + entry.name + "'");
  nets.push_back(std::move(entry));
  return int(nets.size() - 1);
}

std::size_t NetworkBank::total_parameters() const {
  std::size_t total = 0;
  for (const auto& n : nets) total += n.params.flat.size();
  return total;
}

} // namespace pde_embed
