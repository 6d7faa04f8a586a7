#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "branchpde/models.hpp"
#include "branchpde/particles.hpp"
#include "branchpde/run_types.hpp"
#include "branchpde/spectral_field.hpp"

namespace branchpde {

/// Run configuration shared by the scalar and KS drivers. Values <= 0 for
/// density_floor / drift_cap select the documented defaults
/// (1e-4 * L^-d and 0.25 L / tau); n_u / n_v of 0 fall back to n.
struct SolverConfig {
  double tau = 1e-3;
  double t_end = 0.5;
  std::int64_t n = 40000;
  std::int64_t n_u = 0;
  std::int64_t n_v = 0;
  int modes = 10;
  std::uint64_t seed = 0;
  double density_floor = -1.0;
  double drift_cap = -1.0;
  double rate_cap = 5.0;
  double population_cap_factor = 20.0;
  std::vector<double> snapshot_times;  // empty -> 5 evenly spaced incl. 0 and T
  std::size_t eval_grid = 100;
  int workers = 0;  // 0 -> hardware concurrency
  MhParams mh;
  bool recenter_plots = false;
  std::size_t quadrature = 256;
};

/// Config with every default substituted; echoed verbatim into run records.
SolverConfig resolve_config(SolverConfig cfg, int dim, double length, bool two_field);

/// Snapshot of the reconstructed physical fields u~ = Z rho~ (and v~ for KS).
struct FieldSnapshot {
  std::int64_t step = 0;
  double t = 0.0;
  SpectralField u;
  std::optional<SpectralField> v;
};

struct RunResult {
  SolverConfig config;  // resolved
  double z_u = 0.0;
  double z_v = 0.0;
  RunStatus status;
  std::vector<SeriesRow> series;
  std::vector<FieldSnapshot> snapshots;
  std::vector<std::string> warnings;
  std::map<std::string, double> timings_sec;
  // final state, populated on completed runs (density-scale fields)
  std::optional<ParticleSet> particles_u;
  std::optional<ParticleSet> particles_v;
  std::optional<SpectralField> field_u;
  std::optional<SpectralField> field_v;
};

/// Per-step tallies of the guard activations.
struct StepStats {
  std::int64_t floor_hits = 0;
  std::int64_t cap_hits = 0;
};

struct ScalarState {
  ParticleSet particles;
  SpectralField field;  // fixed-N projection of `particles`
};

struct KsState {
  ParticleSet particles_u;
  ParticleSet particles_v;
  SpectralField field_u;
  SpectralField field_v;
};

/// One Lie-Trotter step of the scalar solver: drift from the current field,
/// transport, re-project, branch at rates from the starred field, re-project.
StepStats step_scalar(ScalarState& state, const ScalarModel& model, const SolverConfig& cfg,
                      double z_mass, double tau, std::int64_t step_index);

/// One step of the two-field KS solver (same cadence per population; the
/// u-drift climbs the reconstructed chemical gradient).
StepStats step_ks(KsState& state, const KsModel& model, const SolverConfig& cfg, double tau,
                  std::int64_t step_index);

RunResult run_scalar(const ScalarModel& model, const SolverConfig& cfg);
RunResult run_ks(const KsModel& model, const SolverConfig& cfg);

}  // namespace branchpde
