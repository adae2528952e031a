#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pde_embed/gridfield.hpp"
#include "pde_embed/loss.hpp"
#include "pde_embed/problem.hpp"
#include "pde_embed/trainer.hpp"

namespace pde_embed {

/// A benchmark problem wired for training: the spec with its pools filled,
/// network shapes keyed by name (primary plus any fitted fields), and the
/// published optimizer settings.
struct Preset {
  ProblemSpec spec;
  std::map<std::string, MlpSpec> nets;
  TrainConfig train;
};

/// kdv, kdv_reduced, vgc, reaction_diffusion, reservoir, reservoir_simplified,
/// reservoir_reduced, reservoir_noise, groundwater, groundwater_reduced.
std::vector<std::string> preset_names();

/// `field_seed` fixes the permeability realization of the subsurface
/// problems; training randomness lives in TrainConfig.seed. Throws
/// std::invalid_argument for unknown names.
Preset make_preset(const std::string& name, std::uint64_t field_seed = 2024);

/// Reaction-diffusion u_t = nu u_xx + rho u (1 - u) over the viscous
/// gravity current box, so a trained VGC emulator transfers shape-for-shape.
/// The named preset uses nu = 1, rho = 1.
Preset reaction_diffusion_preset(double nu, double rho);
GridField reaction_diffusion_reference(double nu, double rho);

/// Ground-truth field matching a preset (the KdV spectral run takes ~30 s
/// at full resolution).
GridField preset_reference(const std::string& name, std::uint64_t field_seed = 2024);

/// ln K at cell centers for the subsurface presets. All reservoir variants
/// share one realization per field_seed; groundwater draws its own.
GridField preset_log_k(const std::string& name, std::uint64_t field_seed = 2024);

/// Labeled table over a field's grid points, frames it0..it1 inclusive.
/// `names` gives the column order, e.g. {"x","t"} or {"x","y","t"}.
PointTable field_to_table(const GridField& f, const std::vector<std::string>& names,
                          int it0, int it1);

/// Primary-network predictions at the table's points (row order preserved).
std::vector<double> predict_values(const CompiledProblem& cp, const PointTable& t);

} // namespace pde_embed
