#pragma once

#include <stdexcept>
#include <string>

namespace pde_embed {

struct SolverError : std::runtime_error {
  enum class Kind {
    NonConvergence,       // Picard stalls in a nonlinear 1D solve
    PicardNonConvergence, // Picard stalls in the reservoir solve
    Instability,          // non-finite values appeared mid-run
    LinearSolveFailure,   // inner linear solver missed its tolerance
    BadGrid,
  };
  Kind kind;
  int step; // time step at failure, -1 when not applicable

  SolverError(Kind k, int step_, const std::string& msg)
      : std::runtime_error(msg), kind(k), step(step_) {}
};

} // namespace pde_embed
