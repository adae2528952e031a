#pragma once

#include <functional>

#include "pde_embed/gridfield.hpp"
#include "pde_embed/solver_error.hpp"

namespace pde_embed {

/// u_t = (u u_x)_x on x in [1,2], t in [0,0.5], u(x,0) = -sin(pi x), zero
/// Dirichlet ends. Backward Euler in time; the flux coefficient is Picard
/// linearized with arithmetic face averages, tridiagonal solve per sweep.
/// Picard relative tolerance 1e-10. Throws SolverError(NonConvergence, step).
GridField solve_vgc(int nx, int nt);

/// u_t = nu u_xx + rho u (1 - u) on the same box with zero Dirichlet ends.
/// Crank-Nicolson diffusion, explicit reaction. `initial` overrides the
/// default -sin(pi x) profile.
GridField solve_reaction_diffusion(double nu, double rho, int nx, int nt,
                                   const std::function<double(double)>& initial = {});

/// u_t + u u_x + 0.0025 u_xxx = 0 on periodic [-1,1], u(x,0) = cos(pi x),
/// t in [0,1]. Fourier pseudo-spectral with 2/3 dealiasing, classical RK4
/// with internal step dt_internal (<= 1e-5, refined so output frames land
/// exactly). nx must be a power of two. Throws SolverError(Instability, step)
/// if the run produces non-finite values.
GridField solve_kdv(int nx = 512, int nt = 201, double dt_internal = 5e-6);

} // namespace pde_embed
