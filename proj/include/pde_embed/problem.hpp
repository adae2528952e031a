#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pde_embed/gridfield.hpp"
#include "pde_embed/parser.hpp"

namespace pde_embed {

/// Rectangle boundary side; 1D problems use XMin/XMax only.
enum class Side { XMin, XMax, YMin, YMax };

/// Fixed-value boundary piece. `value` is an expression over the problem's
/// independent variables (usually a constant literal).
struct DirichletSegment {
  Side side;
  std::string value;
};

/// Flux boundary piece. `flux_residual` is a residual expression for
/// n . K grad(u) - g written out by the problem author (for no-flow pieces
/// simply the normal flux itself); its mean square joins the boundary loss.
struct NeumannSegment {
  Side side;
  std::string flux_residual;
};

/// End-to-end identification along one axis: penalizes u(lo,...) - u(hi,...).
struct PeriodicPair {
  int axis = 0; // 0 = x, 1 = y
};

/// Points with one column per named variable plus an optional target column.
struct PointTable {
  std::vector<std::string> names;
  std::vector<std::vector<double>> cols;
  std::vector<double> target;

  std::size_t rows() const { return cols.empty() ? 0 : cols[0].size(); }
  void validate() const; // equal lengths, finite values
};

struct ProblemSpec {
  std::string name;
  std::string residual;
  SymbolContext symbols;

  double x_lo = 0, x_hi = 1;
  double y_lo = 0, y_hi = 0; // y_hi > y_lo marks a 2D domain
  double t_lo = 0, t_hi = 1;

  /// Initial state: expression over the independents, or a gridded field
  /// (frame 0, bilinear) when `initial_grid` is set.
  std::string initial;
  std::optional<GridField> initial_grid;

  std::vector<DirichletSegment> dirichlet;
  std::vector<NeumannSegment> neumann;
  std::vector<PeriodicPair> periodic;

  // sample counts: collocation, initial, Dirichlet (shared with periodic
  // pairs), Neumann, labeled data, coefficient measurements
  int n_collocation = 0;
  int n_initial = 0;
  int n_dirichlet = 0;
  int n_neumann = 0;
  int n_data = 0;
  int n_coeff = 0;

  /// Pools the data/coefficient samplers draw from (targets required).
  PointTable data_pool;
  PointTable coeff_pool;

  /// Physical output range per network name; raw outputs are trained in
  /// [0,1]-ish scale and mapped to [lo,hi]. Networks without an entry keep
  /// identity output maps.
  std::map<std::string, std::pair<double, double>> output_bounds;

  bool two_d() const { return y_hi > y_lo; }
  std::vector<std::string> independent_names() const; // matches symbols order
  void validate() const;                              // throws std::invalid_argument
};

/// Evaluate a closed-form expression (no primaries, no coefficients) on the
/// given columns; `names` declares the independent variables.
std::vector<double> evaluate_expression(const std::string& expr,
                                        const std::vector<std::string>& names,
                                        const std::vector<const std::vector<double>*>& cols);

/// Initial-state values at the given points (expression or gridded form).
std::vector<double> initial_values(const ProblemSpec& spec,
                                   const std::vector<std::string>& names,
                                   const std::vector<const std::vector<double>*>& cols);

struct PointSets {
  PointTable collocation;            // no target
  PointTable initial;                // target: h0
  PointTable dirichlet;              // target: boundary value, all segments
  std::vector<PointTable> neumann;   // one per segment
  std::vector<PointTable> periodic;  // one per pair, columns __lo/__hi/rest
  PointTable data;                   // target: u*
  PointTable coeff;                  // target: K*
};

struct SamplingError : std::runtime_error {
  enum class Kind { EmptyRegion };
  Kind kind;
  SamplingError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

/// Uniform i.i.d. draws inside each region, deterministic per seed. Boundary
/// tables carry their fixed coordinate exactly; data/coefficient tables are
/// drawn without replacement from the spec's pools.
PointSets sample_points(const ProblemSpec& spec, std::uint64_t seed);

} // namespace pde_embed
