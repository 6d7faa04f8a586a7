#include "branchpde/solver.hpp"

#include <chrono>
#include <cmath>
#include <set>

#include "branchpde/errors.hpp"
#include "branchpde/kernels.hpp"
#include "branchpde/parallel.hpp"

namespace branchpde {

namespace {

using Clock = std::chrono::steady_clock;

class StageTimer {
 public:
  explicit StageTimer(std::map<std::string, double>& sink) : sink_(sink) {}
  template <typename F>
  auto time(const char* stage, F&& f) -> decltype(f()) {
    const auto t0 = Clock::now();
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      sink_[stage] += std::chrono::duration<double>(Clock::now() - t0).count();
    } else {
      auto r = f();
      sink_[stage] += std::chrono::duration<double>(Clock::now() - t0).count();
      return r;
    }
  }

 private:
  std::map<std::string, double>& sink_;
};

struct BlockTallies {
  std::vector<std::int64_t> floor_hits;
  std::vector<std::int64_t> cap_hits;
  explicit BlockTallies(std::size_t blocks) : floor_hits(blocks, 0), cap_hits(blocks, 0) {}
  void add_to(StepStats& stats) const {
    for (auto v : floor_hits) stats.floor_hits += v;
    for (auto v : cap_hits) stats.cap_hits += v;
  }
};

void check_finite(const SpectralField& field, std::int64_t step, const char* what) {
  if (!field.all_finite())
    throw BlowupError(std::string("non-finite coefficient in ") + what + " at step " +
                      std::to_string(step));
}

// Drift b = -a~(rho~) for the scalar model, with the density floored where it
// enters the nonlinearity and the velocity capped in Euclidean norm.
std::vector<double> scalar_drift(const ParticleSet& particles, const SpectralField& field,
                                 const ScalarModel& model, const SolverConfig& cfg, double z,
                                 StepStats& stats) {
  const int d = particles.dim();
  const auto n = static_cast<std::size_t>(particles.size());
  std::vector<double> drift(n * d, 0.0);
  BlockTallies tallies(par::block_count(n));
  par::for_blocks(n, [&](std::size_t block, std::size_t begin, std::size_t end) {
    std::vector<double> vel(d);
    for (std::size_t i = begin; i < end; ++i) {
      const double* x = particles.position(static_cast<std::int64_t>(i));
      double rho = field.evaluate(x);
      if (rho < cfg.density_floor) {
        rho = cfg.density_floor;
        ++tallies.floor_hits[block];
      }
      model.advection(z * rho, vel.data());
      double norm_sq = 0.0;
      for (int j = 0; j < d; ++j) {
        drift[i * d + j] = -vel[j];
        norm_sq += vel[j] * vel[j];
      }
      if (norm_sq > cfg.drift_cap * cfg.drift_cap) {
        const double scale = cfg.drift_cap / std::sqrt(norm_sq);
        for (int j = 0; j < d; ++j) drift[i * d + j] *= scale;
        ++tallies.cap_hits[block];
      }
    }
  });
  tallies.add_to(stats);
  return drift;
}

// Branching rate c = r~(max(rho~*, eps)) = r(Z max(rho~*, eps)), capped so
// |c tau| <= rate_cap.
std::vector<double> scalar_rates(const ParticleSet& particles, const SpectralField& star,
                                 const ScalarModel& model, const SolverConfig& cfg, double z,
                                 double tau, StepStats& stats) {
  const auto n = static_cast<std::size_t>(particles.size());
  std::vector<double> rates(n, 0.0);
  BlockTallies tallies(par::block_count(n));
  const double cap = cfg.rate_cap / tau;
  par::for_blocks(n, [&](std::size_t block, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const double* x = particles.position(static_cast<std::int64_t>(i));
      double rho = star.evaluate(x);
      if (rho < cfg.density_floor) {
        rho = cfg.density_floor;
        ++tallies.floor_hits[block];
      }
      double c = model.reaction(z * rho);
      if (std::abs(c) > cap) {
        c = std::copysign(cap, c);
        ++tallies.cap_hits[block];
      }
      rates[i] = c;
    }
  });
  tallies.add_to(stats);
  return rates;
}

}  // namespace

SolverConfig resolve_config(SolverConfig cfg, int dim, double length, bool two_field) {
  if (!(cfg.tau > 0.0)) throw ConfigError("tau must be > 0");
  if (cfg.t_end < 0.0) throw ConfigError("t-end must be >= 0");
  if (cfg.modes < 1) throw ConfigError("modes must be >= 1");
  if (cfg.rate_cap <= 0.0) throw ConfigError("rate-cap must be > 0");
  if (cfg.population_cap_factor <= 0.0) throw ConfigError("population-cap-factor must be > 0");
  if (two_field) {
    if (cfg.n_u <= 0) cfg.n_u = cfg.n;
    if (cfg.n_v <= 0) cfg.n_v = cfg.n;
    if (cfg.n_u < 1 || cfg.n_v < 1) throw ConfigError("particle counts must be >= 1");
  } else {
    if (cfg.n < 1) throw ConfigError("n must be >= 1");
    cfg.n_u = cfg.n;
    cfg.n_v = 0;
  }
  if (cfg.density_floor <= 0.0) cfg.density_floor = 1e-4 * std::pow(length, -dim);
  if (cfg.drift_cap <= 0.0) cfg.drift_cap = 0.25 * length / cfg.tau;
  if (cfg.eval_grid < 2) throw ConfigError("grid must be >= 2");
  if (cfg.snapshot_times.empty()) {
    if (cfg.t_end <= 0.0) {
      cfg.snapshot_times = {0.0};
    } else {
      for (int i = 0; i < 5; ++i) cfg.snapshot_times.push_back(cfg.t_end * i / 4.0);
    }
  }
  for (double s : cfg.snapshot_times)
    if (s < 0.0 || s > cfg.t_end + 1e-12 * std::max(1.0, cfg.t_end))
      throw ConfigError("snapshot time outside [0, t-end]");
  return cfg;
}

namespace {

std::int64_t step_count(double t_end, double tau) {
  if (t_end <= 0.0) return 0;
  return static_cast<std::int64_t>(std::ceil(t_end / tau - 1e-9));
}

std::set<std::int64_t> snapshot_steps(const SolverConfig& cfg, std::int64_t total_steps) {
  std::set<std::int64_t> steps;
  for (double s : cfg.snapshot_times) {
    auto idx = static_cast<std::int64_t>(std::llround(s / cfg.tau));
    if (idx < 0) idx = 0;
    if (idx > total_steps) idx = total_steps;
    steps.insert(idx);
  }
  return steps;
}

SpectralField scaled_copy(const SpectralField& field, double z) {
  SpectralField out(field.domain(), field.truncation());
  for (std::size_t m = 0; m < field.mode_count(); ++m) out.coeffs()[m] = field.coeffs()[m] * z;
  return out;
}

}  // namespace

StepStats step_scalar(ScalarState& state, const ScalarModel& model, const SolverConfig& cfg,
                      double z_mass, double tau, std::int64_t step_index) {
  StepStats stats;
  std::vector<double> drift;
  if (model.advection)
    drift = scalar_drift(state.particles, state.field, model, cfg, z_mass, stats);

  ParticleSet moved = sde_propagate(state.particles, tau, std::span<const double>(drift),
                                    std::sqrt(2.0 * model.diffusion), step_index, cfg.seed, 0);
  SpectralField star = project_particles(moved, state.particles.n_initial(), cfg.modes);
  check_finite(star, step_index, "post-transport projection");

  if (model.reaction) {
    const auto rates = scalar_rates(moved, star, model, cfg, z_mass, tau, stats);
    const auto cap = static_cast<std::int64_t>(cfg.population_cap_factor *
                                               static_cast<double>(moved.n_initial()));
    ParticleSet branched =
        birth_death(moved, tau, std::span<const double>(rates), step_index, cfg.seed, 0, cap);
    state.field = project_particles(branched, moved.n_initial(), cfg.modes);
    check_finite(state.field, step_index, "post-branching projection");
    state.particles = std::move(branched);
  } else {
    // no reaction: branching is the identity, star already projects `moved`
    state.field = std::move(star);
    state.particles = std::move(moved);
  }
  return stats;
}

namespace {

// u-drift b = (chi(t)/t) Z_v grad(rho~_v) with t = Z_u max(rho~_u, eps): the
// spec formula grouped so that chi(u) = u cancels the floor bit-exactly.
std::vector<double> ks_drift_u(const ParticleSet& particles, const SpectralField& field_u,
                               const SpectralField& field_v, const KsModel& model,
                               const SolverConfig& cfg, StepStats& stats) {
  const int d = particles.dim();
  const auto n = static_cast<std::size_t>(particles.size());
  std::vector<double> drift(n * d, 0.0);
  BlockTallies tallies(par::block_count(n));
  par::for_blocks(n, [&](std::size_t block, std::size_t begin, std::size_t end) {
    std::vector<double> grad(d);
    for (std::size_t i = begin; i < end; ++i) {
      const double* x = particles.position(static_cast<std::int64_t>(i));
      double rho_u = field_u.evaluate(x);
      if (rho_u < cfg.density_floor) {
        rho_u = cfg.density_floor;
        ++tallies.floor_hits[block];
      }
      const double t = model.z_u * rho_u;
      const double sensitivity = model.chi(t) / t;
      field_v.gradient(x, grad.data());
      double norm_sq = 0.0;
      for (int j = 0; j < d; ++j) {
        const double b = sensitivity * model.z_v * grad[j];
        drift[i * d + j] = b;
        norm_sq += b * b;
      }
      if (norm_sq > cfg.drift_cap * cfg.drift_cap) {
        const double scale = cfg.drift_cap / std::sqrt(norm_sq);
        for (int j = 0; j < d; ++j) drift[i * d + j] *= scale;
        ++tallies.cap_hits[block];
      }
    }
  });
  tallies.add_to(stats);
  return drift;
}

// Rates c = f(u~*, v~*) / w~* with w the population's own field; every field
// value is floored at eps Z before it enters f or the denominator.
std::vector<double> ks_rates(const ParticleSet& particles, const SpectralField& star_u,
                             const SpectralField& star_v, const KsModel& model,
                             const SolverConfig& cfg, double tau, bool for_u, StepStats& stats) {
  const auto n = static_cast<std::size_t>(particles.size());
  std::vector<double> rates(n, 0.0);
  BlockTallies tallies(par::block_count(n));
  const double cap = cfg.rate_cap / tau;
  par::for_blocks(n, [&](std::size_t block, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const double* x = particles.position(static_cast<std::int64_t>(i));
      double rho_u = star_u.evaluate(x);
      if (rho_u < cfg.density_floor) {
        rho_u = cfg.density_floor;
        ++tallies.floor_hits[block];
      }
      double rho_v = star_v.evaluate(x);
      if (rho_v < cfg.density_floor) {
        rho_v = cfg.density_floor;
        ++tallies.floor_hits[block];
      }
      const double u = model.z_u * rho_u;
      const double v = model.z_v * rho_v;
      double c = for_u ? model.f_u(u, v) / u : model.f_v(u, v) / v;
      if (std::abs(c) > cap) {
        c = std::copysign(cap, c);
        ++tallies.cap_hits[block];
      }
      rates[i] = c;
    }
  });
  tallies.add_to(stats);
  return rates;
}

}  // namespace

StepStats step_ks(KsState& state, const KsModel& model, const SolverConfig& cfg, double tau,
                  std::int64_t step_index) {
  StepStats stats;
  std::vector<double> drift_u;
  if (model.chi)
    drift_u = ks_drift_u(state.particles_u, state.field_u, state.field_v, model, cfg, stats);

  ParticleSet moved_u =
      sde_propagate(state.particles_u, tau, std::span<const double>(drift_u),
                    std::sqrt(2.0 * model.diffusion_u), step_index, cfg.seed, 0);
  ParticleSet moved_v = sde_propagate(state.particles_v, tau, std::span<const double>(),
                                      std::sqrt(2.0 * model.diffusion_v), step_index, cfg.seed, 1);

  SpectralField star_u = project_particles(moved_u, state.particles_u.n_initial(), cfg.modes);
  SpectralField star_v = project_particles(moved_v, state.particles_v.n_initial(), cfg.modes);
  check_finite(star_u, step_index, "u post-transport projection");
  check_finite(star_v, step_index, "v post-transport projection");

  // both populations branch at rates frozen from the starred fields
  std::vector<double> rates_u, rates_v;
  if (model.f_u) rates_u = ks_rates(moved_u, star_u, star_v, model, cfg, tau, true, stats);
  if (model.f_v) rates_v = ks_rates(moved_v, star_u, star_v, model, cfg, tau, false, stats);

  if (model.f_u) {
    const auto cap = static_cast<std::int64_t>(cfg.population_cap_factor *
                                               static_cast<double>(moved_u.n_initial()));
    ParticleSet branched =
        birth_death(moved_u, tau, std::span<const double>(rates_u), step_index, cfg.seed, 0, cap);
    state.field_u = project_particles(branched, moved_u.n_initial(), cfg.modes);
    check_finite(state.field_u, step_index, "u post-branching projection");
    state.particles_u = std::move(branched);
  } else {
    state.field_u = std::move(star_u);
    state.particles_u = std::move(moved_u);
  }

  if (model.f_v) {
    const auto cap = static_cast<std::int64_t>(cfg.population_cap_factor *
                                               static_cast<double>(moved_v.n_initial()));
    ParticleSet branched =
        birth_death(moved_v, tau, std::span<const double>(rates_v), step_index, cfg.seed, 1, cap);
    state.field_v = project_particles(branched, moved_v.n_initial(), cfg.modes);
    check_finite(state.field_v, step_index, "v post-branching projection");
    state.particles_v = std::move(branched);
  } else {
    state.field_v = std::move(star_v);
    state.particles_v = std::move(moved_v);
  }
  return stats;
}

namespace {

// Exact rejection when the model supplies a sup bound for the initial datum;
// Metropolis-Hastings otherwise.
ParticleSet draw_initial(const TorusDomain& domain, const DensityFn& rho0, double sup_u0,
                         double z, std::int64_t n, const SolverConfig& cfg,
                         std::uint64_t population) {
  if (sup_u0 > 0.0)
    return sample_rejection(domain, rho0, sup_u0 / z * (1.0 + 1e-12), n, cfg.seed, population);
  return sample_initial(domain, rho0, n, cfg.mh, cfg.seed, population);
}

SeriesRow make_row(double t, const ParticleSet& pu, double z_u, const ParticleSet* pv, double z_v,
                   const StepStats& stats) {
  SeriesRow row;
  row.t = t;
  row.count_u = pu.size();
  row.mass_u = pu.total_mass_estimate(z_u);
  if (pv) {
    row.count_v = pv->size();
    row.mass_v = pv->total_mass_estimate(z_v);
  }
  row.floor_hits = stats.floor_hits;
  row.cap_hits = stats.cap_hits;
  return row;
}

}  // namespace

RunResult run_scalar(const ScalarModel& model, const SolverConfig& cfg_in) {
  if (!(model.diffusion > 0.0)) throw ModelError("scalar model: diffusion must be > 0");
  if (!model.initial) throw ModelError("scalar model: missing initial datum");
  const SolverConfig cfg = resolve_config(cfg_in, model.dim, model.length, false);
  par::set_worker_count(cfg.workers);

  RunResult result;
  result.config = cfg;
  StageTimer timer(result.timings_sec);
  const TorusDomain domain = model.domain();

  const double z = model.z_mass > 0.0
                       ? model.z_mass
                       : timer.time("compute_z", [&] {
                           return compute_z(domain, model.initial, cfg.quadrature);
                         });
  if (!(z > 0.0)) throw ModelError("scalar model: total initial mass must be positive");
  result.z_u = z;

  const DensityFn rho0 = [&model, z](const double* x) { return model.initial(x) / z; };
  ScalarState state{
      timer.time("sample",
                 [&] { return draw_initial(domain, rho0, model.initial_sup, z, cfg.n, cfg, 0); }),
      SpectralField(domain, cfg.modes)};
  state.field = timer.time("project", [&] { return project_particles(state.particles, cfg.n, cfg.modes); });
  check_finite(state.field, 0, "initial projection");

  const std::int64_t steps = step_count(cfg.t_end, cfg.tau);
  const auto snaps = snapshot_steps(cfg, steps);

  result.series.push_back(make_row(0.0, state.particles, z, nullptr, 0.0, StepStats{}));
  if (snaps.count(0))
    result.snapshots.push_back({0, 0.0, scaled_copy(state.field, z), std::nullopt});

  for (std::int64_t n = 0; n < steps; ++n) {
    const double t0 = static_cast<double>(n) * cfg.tau;
    const double t1 = std::min(static_cast<double>(n + 1) * cfg.tau, cfg.t_end);
    try {
      const StepStats stats = timer.time("step", [&] {
        return step_scalar(state, model, cfg, z, t1 - t0, n);
      });
      result.series.push_back(make_row(t1, state.particles, z, nullptr, 0.0, stats));
    } catch (const BlowupError& e) {
      result.status = {false, n, e.what()};
      return result;
    }
    if (snaps.count(n + 1))
      result.snapshots.push_back({n + 1, t1, scaled_copy(state.field, z), std::nullopt});
  }

  result.field_u = state.field;
  result.particles_u = std::move(state.particles);
  return result;
}

RunResult run_ks(const KsModel& model, const SolverConfig& cfg_in) {
  if (!(model.diffusion_u > 0.0) || !(model.diffusion_v > 0.0))
    throw ModelError("ks model: diffusion coefficients must be > 0");
  if (!model.initial_u || !model.initial_v) throw ModelError("ks model: missing initial data");
  const SolverConfig cfg = resolve_config(cfg_in, model.dim, model.length, true);
  par::set_worker_count(cfg.workers);

  RunResult result;
  result.config = cfg;
  StageTimer timer(result.timings_sec);
  const TorusDomain domain = model.domain();

  KsModel m = model;  // local copy so resolved Z values ride along
  if (m.z_u <= 0.0)
    m.z_u = timer.time("compute_z", [&] { return compute_z(domain, m.initial_u, cfg.quadrature); });
  if (m.z_v <= 0.0)
    m.z_v = timer.time("compute_z", [&] { return compute_z(domain, m.initial_v, cfg.quadrature); });
  if (!(m.z_u > 0.0) || !(m.z_v > 0.0))
    throw ModelError("ks model: total initial masses must be positive");
  result.z_u = m.z_u;
  result.z_v = m.z_v;

  const DensityFn rho_u0 = [&m](const double* x) { return m.initial_u(x) / m.z_u; };
  const DensityFn rho_v0 = [&m](const double* x) { return m.initial_v(x) / m.z_v; };

  KsState state{
      timer.time("sample",
                 [&] {
                   return draw_initial(domain, rho_u0, m.initial_sup_u, m.z_u, cfg.n_u, cfg, 0);
                 }),
      timer.time("sample",
                 [&] {
                   return draw_initial(domain, rho_v0, m.initial_sup_v, m.z_v, cfg.n_v, cfg, 1);
                 }),
      SpectralField(domain, cfg.modes), SpectralField(domain, cfg.modes)};
  state.field_u = timer.time("project", [&] { return project_particles(state.particles_u, cfg.n_u, cfg.modes); });
  state.field_v = timer.time("project", [&] { return project_particles(state.particles_v, cfg.n_v, cfg.modes); });
  check_finite(state.field_u, 0, "initial u projection");
  check_finite(state.field_v, 0, "initial v projection");

  const std::int64_t steps = step_count(cfg.t_end, cfg.tau);
  const auto snaps = snapshot_steps(cfg, steps);

  result.series.push_back(
      make_row(0.0, state.particles_u, m.z_u, &state.particles_v, m.z_v, StepStats{}));
  if (snaps.count(0))
    result.snapshots.push_back(
        {0, 0.0, scaled_copy(state.field_u, m.z_u), scaled_copy(state.field_v, m.z_v)});

  for (std::int64_t n = 0; n < steps; ++n) {
    const double t0 = static_cast<double>(n) * cfg.tau;
    const double t1 = std::min(static_cast<double>(n + 1) * cfg.tau, cfg.t_end);
    try {
      const StepStats stats =
          timer.time("step", [&] { return step_ks(state, m, cfg, t1 - t0, n); });
      result.series.push_back(
          make_row(t1, state.particles_u, m.z_u, &state.particles_v, m.z_v, stats));
    } catch (const BlowupError& e) {
      result.status = {false, n, e.what()};
      return result;
    }
    if (snaps.count(n + 1))
      result.snapshots.push_back(
          {n + 1, t1, scaled_copy(state.field_u, m.z_u), scaled_copy(state.field_v, m.z_v)});
  }

  result.field_u = state.field_u;
  result.field_v = state.field_v;
  result.particles_u = std::move(state.particles_u);
  result.particles_v = std::move(state.particles_v);
  return result;
}

}  // namespace branchpde
