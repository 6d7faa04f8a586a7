#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "branchpde/models.hpp"
#include "branchpde/run_types.hpp"
#include "branchpde/spectral_field.hpp"
#include "branchpde/torus.hpp"

namespace branchpde {

/// Values on the cell-corner uniform grid, row-major over uniform_grid(n).
struct GridField {
  TorusDomain domain;
  std::size_t n = 0;
  std::vector<double> values;

  GridField(TorusDomain d, std::size_t n_per_axis)
      : domain(std::move(d)), n(n_per_axis) {
    if (n_per_axis < 4) throw std::invalid_argument("GridField: n must be >= 4");
    std::size_t total = 1;
    for (int j = 0; j < domain.dim(); ++j) total *= n_per_axis;
    values.assign(total, 0.0);
  }

  double spacing() const { return domain.length() / static_cast<double>(n); }
  double cell_volume() const { return std::pow(spacing(), domain.dim()); }
  double mass() const;
  bool all_finite() const;
};

GridField sample_grid_field(const TorusDomain& domain, std::size_t n, const DensityFn& f);

/// 2d+1-point periodic Laplacian of U, written into `out`.
void fd_laplacian(const GridField& u, std::vector<double>& out);

/// One explicit Euler step of u_t = D lap(u) + u - u^3 (reaction optional,
/// the diffusion-only form is the single-mode decay test hook). Enforces the
/// stability bound tau <= h^2 / (2 d D).
GridField fd_step_ac(const GridField& u, double diffusion, double tau, bool with_reaction = true);

/// One explicit step of the KS pair with a conservative face-flux chemotaxis
/// term: with f_u = 0 the discrete u-mass telescopes to machine precision.
std::pair<GridField, GridField> fd_step_ks(const GridField& u, const GridField& v,
                                           const KsModel& model, double tau);

/// Largest stable tau for the explicit schemes at the current state.
double fd_stability_bound_ac(const GridField& u, double diffusion);
double fd_stability_bound_ks(const GridField& u, const GridField& v, const KsModel& model);

/// Downsample by an integer stride (grids of n and n*stride share corners).
GridField subsample(const GridField& fine, std::size_t stride);

/// Quadrature projection of grid data onto the spectral basis (the grid is
/// its own trapezoid rule); used by the H^-s comparison path.
SpectralField project_grid(const GridField& grid, int truncation);

struct FdSnapshot {
  std::int64_t step = 0;
  double t = 0.0;
  GridField u;
  std::optional<GridField> v;
};

struct FdRunResult {
  RunStatus status;
  std::vector<SeriesRow> series;
  std::vector<FdSnapshot> snapshots;
  std::vector<double> step_sizes;  // actual (adaptive) tau sequence
  std::optional<GridField> final_u;
  std::optional<GridField> final_v;
};

struct FdConfig {
  std::size_t grid = 100;
  double tau = -1.0;  // <= 0: pick from the stability bound each step
  double t_end = 0.5;
  double safety = 0.5;
  std::vector<double> snapshot_times;  // empty -> 5 evenly spaced incl. 0 and T
  std::int64_t max_steps = 50'000'000;
};

/// Reference run for a scalar preset model (Allen-Cahn form).
FdRunResult run_fd_scalar(const ScalarModel& model, const FdConfig& cfg);

/// Reference run for a KS model; the step size tracks the diffusion and
/// advection CFL bounds, landing exactly on snapshot times.
FdRunResult run_fd_ks(const KsModel& model, const FdConfig& cfg);

}  // namespace branchpde
