#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "pde_embed/gridfield.hpp"

namespace pde_embed {

struct KleError : std::runtime_error {
  enum class Kind { RootBracketingFailed, BadSpec };
  Kind kind;
  KleError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

/// Eigenpairs of the unit-variance exponential kernel exp(-|x1-x2|/eta) on [0, L].
/// Eigenfunctions alternate even/odd about the midpoint; eigenvalues are
/// lambda = 2c/(w^2 + c^2) with c = 1/eta and w the transcendental roots in
/// ascending order, so lambda is strictly descending.
struct Kle1d {
  double length = 0;
  double eta = 0;
  std::vector<double> lambda;
  std::vector<double> omega;
  std::vector<uint8_t> even;

  int modes() const { return int(lambda.size()); }
  /// L2-orthonormal eigenfunction value at x in [0, length].
  double eigenfunction(int mode, double x) const;
};

Kle1d kle_eigenpairs_1d(double eta, double length, int n_modes);

struct KleSpec {
  double variance = 4.0; // sigma^2 of ln K
  double eta_x = 408.0;  // correlation length, m
  double eta_y = 408.0;
  double mean_ln = 4.0; // <ln K>, ln(md)
  int trunc = 32;
  double length_x = 1020.0; // m
  double length_y = 1020.0;

  void validate() const; // throws KleError(BadSpec)
};

/// One retained separable mode of the 2D kernel.
struct KleMode2d {
  int ix = 0, iy = 0; // indices into the per-axis 1D mode lists
  double lambda = 0;  // variance * lambda_x[ix] * lambda_y[iy]
};

/// Top `trunc` product modes, lambda descending, ties broken by (ix, iy)
/// lexicographic order.
std::vector<KleMode2d> kle_modes_2d(const Kle1d& kx, const Kle1d& ky, double variance, int trunc);

/// ln K sampled at the cell centers of an nx-by-ny grid covering the domain:
/// ln K = mean_ln + sum_m sqrt(lambda_m) f_m xi_m. xi must hold spec.trunc
/// standard-normal draws; the seeded overload draws them in mode order.
GridField kle_realize(const KleSpec& spec, int nx, int ny, const std::vector<double>& xi);
GridField kle_realize(const KleSpec& spec, int nx, int ny, uint64_t seed);

} // namespace pde_embed
