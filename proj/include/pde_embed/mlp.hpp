#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "pde_embed/activation.hpp"

namespace pde_embed {

struct MlpError : std::runtime_error {
  enum class Kind { BadSpec, ShapeMismatch, NonFiniteOutput };
  Kind kind;
  int layer = -1;
  MlpError(Kind k, const std::string& msg, int layer_idx = -1)
      : std::runtime_error(msg), kind(k), layer(layer_idx) {}
};

// Fully connected architecture: input_dim -> hidden_width (x hidden_layers,
// activation after each) -> output_dim with a linear head.
struct MlpSpec {
  int input_dim = 1;
  int hidden_layers = 1;
  int hidden_width = 1;
  int output_dim = 1;
  ActivationKind activation = ActivationKind::Tanh;

  void validate() const;
  int affine_count() const { return hidden_layers + 1; }
  int fan_in(int layer) const { return layer == 0 ? input_dim : hidden_width; }
  int fan_out(int layer) const { return layer == hidden_layers ? output_dim : hidden_width; }
  std::size_t parameter_count() const;
  bool operator==(const MlpSpec&) const = default;
};

// Flat parameter vector plus affine normalization maps. Layout is layer
// major: W0 row-major (fan_out x fan_in), b0, W1, b1, ...
// Input map: z_d = (x_d - in_shift_d) / in_scale_d.
// Output map: y_d = out_scale_d * raw_d + out_shift_d.
struct MlpParams {
  MlpSpec spec;
  std::vector<double> flat;
  std::vector<double> in_scale, in_shift;
  std::vector<double> out_scale, out_shift;

  std::size_t w_offset(int layer) const;
  std::size_t b_offset(int layer) const;
  double* W(int layer) { return flat.data() + w_offset(layer); }
  const double* W(int layer) const { return flat.data() + w_offset(layer); }
  double* b(int layer) { return flat.data() + b_offset(layer); }
  const double* b(int layer) const { return flat.data() + b_offset(layer); }

  void validate() const;
};

MlpParams init(const MlpSpec& spec, std::uint64_t seed);

// Batch forward pass. x is n rows of input_dim values, row-major; the result
// is n rows of output_dim values. Throws NonFiniteOutput naming the first
// affine layer whose output is not finite.
std::vector<double> forward(const MlpParams& params, const double* x, std::size_t n);
std::vector<double> forward(const MlpParams& params, const std::vector<double>& x_rows);

enum class NetworkRole { Primary, FittedField };

std::string to_string(NetworkRole r);
NetworkRole network_role_from_string(const std::string& s);

struct NetworkEntry {
  std::string name;
  NetworkRole role = NetworkRole::Primary;
  MlpParams params;
};

// Owns every network a problem uses. Compute graphs refer to entries by
// index; checkpoints address them by (role, name).
struct NetworkBank {
  std::vector<NetworkEntry> nets;

  int find(const std::string& name) const;
  int add(NetworkEntry entry);
  std::size_t total_parameters() const;
};

} // namespace pde_embed
