#pragma once

#include "pde_embed/gridfield.hpp"
#include "pde_embed/solver_error.hpp"

namespace pde_embed {

/// Single-phase slightly compressible flow in field units. Pressures are bar,
/// permeability md, viscosity cp, time days; the solver converts to SI
/// internally (1 md = 9.869233e-16 m^2, 1 cp = 1e-3 Pa s, 1 bar = 1e5 Pa,
/// 1 day = 86400 s).
struct ReservoirParams {
  double porosity = 0.2;
  double compressibility = 9e-3; // 1/bar, fluid compressibility C
  double viscosibility = 1e-2;   // 1/bar, viscosity pressure coefficient C_v
  double p_ref = 200.0;          // bar
  double b_ref = 1.1;            // formation volume factor at p_ref
  double mu_ref = 2.0;           // cp at p_ref
  double p_left = 300.0;         // bar, Dirichlet at x = 0
  double p_right = 200.0;        // bar, Dirichlet at x = Lx
  double p_init = 200.0;         // bar
  double dt_days = 1.0;
  int steps = 50;

  void validate() const; // throws std::invalid_argument

  /// B(P) = B_ref exp(-C (P - P_ref)), P in bar.
  double formation_volume_factor(double p_bar) const;
  /// mu(P) = mu_ref exp(C_v (P - P_ref)), P in bar.
  double viscosity_cp(double p_bar) const;
};

/// Pressure history on the cell grid of `k_md` (a static nx-by-ny field of
/// permeabilities in md, cell-centered). Backward Euler with Picard iteration
/// on the pressure-dependent B and mu; harmonic-mean face transmissibilities
/// of K/(B mu); Jacobi-preconditioned CG inner solves (relative residual
/// 1e-10). Left/right Dirichlet via half-cell faces, no-flow top and bottom.
/// Output frames are bar, frame 0 is the initial state.
/// Throws SolverError(PicardNonConvergence, step) and
/// SolverError(LinearSolveFailure, step).
GridField solve_reservoir(const GridField& k_md, const ReservoirParams& params = {});

/// Linear transient head equation S_s dh/dt = div(K grad h) on the same
/// cell-centered geometry. `k_field` holds hydraulic conductivity in
/// consistent length-per-day units; heads and the boundary values share the
/// length unit; one linear solve per step.
GridField solve_groundwater(const GridField& k_field, double specific_storage, int steps = 50,
                            double dt_days = 1.0, double h_left = 202.0, double h_right = 200.0);

} // namespace pde_embed
