#include <doctest.h>

#include <cmath>
#include <vector>

#include "branchpde/errors.hpp"
#include "branchpde/metrics.hpp"
#include "branchpde/solver.hpp"

using namespace branchpde;

namespace {

constexpr double kPi = 3.14159265358979323846;

ScalarModel pure_heat_model() {
  ScalarModel m;
  m.name = "pure-heat";
  m.diffusion = 0.5;
  m.initial = [](const double* x) {
    const double s = std::sin(x[0]);
    const double c = std::cos(x[1]);
    return s * s * c * c;
  };
  m.z_mass = kPi * kPi;
  return m;
}

}  // namespace

TEST_CASE("resolve_config fills the documented defaults") {
  SolverConfig cfg;
  cfg.tau = 2e-3;
  cfg.t_end = 0.8;
  auto resolved = resolve_config(cfg, 2, 2.0 * kPi, false);
  CHECK(resolved.density_floor ==
        doctest::Approx(1e-4 / std::pow(2.0 * kPi, 2)).epsilon(1e-14));
  CHECK(resolved.drift_cap == doctest::Approx(0.25 * 2.0 * kPi / 2e-3).epsilon(1e-14));
  REQUIRE(resolved.snapshot_times.size() == 5);
  CHECK(resolved.snapshot_times.front() == 0.0);
  CHECK(resolved.snapshot_times.back() == doctest::Approx(0.8));
  CHECK(resolved.n_u == cfg.n);

  SolverConfig bad = cfg;
  bad.tau = 0.0;
  CHECK_THROWS_AS(resolve_config(bad, 2, 2.0 * kPi, false), ConfigError);
}

TEST_CASE("pure heat: conserved population and constant mean mode") {
  SolverConfig cfg;
  cfg.tau = 0.01;
  cfg.t_end = 0.05;
  cfg.n = 4000;
  cfg.modes = 4;
  cfg.seed = 5;
  auto result = run_scalar(pure_heat_model(), cfg);
  REQUIRE(result.status.completed);
  REQUIRE(result.series.size() == 6);
  for (const auto& row : result.series) {
    CHECK(row.count_u == 4000);
    CHECK(row.mass_u == kPi * kPi);  // full population: exactly Z
    CHECK(row.floor_hits == 0);
    CHECK(row.cap_hits == 0);
  }
  // constant mode only counts particles: identical across snapshots
  REQUIRE(result.snapshots.size() >= 2);
  const std::vector<int> zero{0, 0};
  const double a0 = result.snapshots.front().u.coeff(zero);
  for (const auto& snap : result.snapshots) CHECK(snap.u.coeff(zero) == a0);
}

TEST_CASE("zero horizon: initial snapshot only, mass exactly Z") {
  SolverConfig cfg;
  cfg.t_end = 0.0;
  cfg.n = 1000;
  cfg.modes = 3;
  auto result = run_scalar(pure_heat_model(), cfg);
  REQUIRE(result.status.completed);
  CHECK(result.series.size() == 1);
  CHECK(result.series[0].mass_u == kPi * kPi);
  REQUIRE(result.snapshots.size() == 1);
  CHECK(result.snapshots[0].t == 0.0);
  CHECK(result.snapshots[0].u.mass() ==
        doctest::Approx(kPi * kPi).epsilon(1e-12));
}

TEST_CASE("pure exponential growth tracks Z e^T within Monte Carlo bands") {
  ScalarModel m;
  m.name = "pure-growth";
  m.diffusion = 0.5;
  m.reaction = [](double) { return 1.0; };
  m.initial = [](const double*) { return 1.0; };
  m.z_mass = 4.0 * kPi * kPi;
  SolverConfig cfg;
  cfg.tau = 0.05;
  cfg.t_end = 0.5;
  cfg.n = 10000;
  cfg.modes = 3;
  cfg.seed = 11;
  auto result = run_scalar(m, cfg);
  REQUIRE(result.status.completed);
  const double target = m.z_mass * std::exp(0.5);
  // Galton-Watson variance with per-step multiplier e^{c tau}
  const double mult = std::exp(cfg.tau);
  const int steps = 10;
  const double var =
      std::pow(mult, steps - 2) * (std::pow(mult, steps) - 1.0) / cfg.n;
  const double sd_mass = m.z_mass * std::sqrt(var);
  CHECK(std::abs(result.series.back().mass_u - target) < 5.0 * sd_mass);
}

TEST_CASE("lie-trotter splitting bias halves with tau (logistic reaction)") {
  // deterministic part: the split recursion u <- u e^{(1-u) tau} against the
  // exact logistic flow
  const double u0 = 0.5, horizon = 0.5;
  auto split = [&](double tau) {
    double u = u0;
    const int steps = static_cast<int>(std::llround(horizon / tau));
    for (int n = 0; n < steps; ++n) u *= std::exp((1.0 - u) * tau);
    return u;
  };
  const double exact = u0 * std::exp(horizon) / (1.0 + u0 * (std::exp(horizon) - 1.0));
  const double bias_coarse = std::abs(split(0.1) - exact);
  const double bias_fine = std::abs(split(0.05) - exact);
  CHECK(bias_coarse / bias_fine == doctest::Approx(2.0).epsilon(0.25));

  // stochastic part: the particle mass tracks the split expectation curve
  ScalarModel m;
  m.name = "logistic-uniform";
  m.diffusion = 0.3;
  m.reaction = [](double u) { return 1.0 - u; };
  m.initial = [](const double*) { return 0.5; };
  m.z_mass = 0.5 * 4.0 * kPi * kPi;
  SolverConfig cfg;
  cfg.tau = 0.1;
  cfg.t_end = 0.5;
  cfg.n = 100000;
  cfg.modes = 2;
  double mean_u = 0.0;
  const int seeds = 2;
  for (int s = 0; s < seeds; ++s) {
    cfg.seed = 100 + s;
    auto result = run_scalar(m, cfg);
    REQUIRE(result.status.completed);
    mean_u += result.series.back().mass_u / (4.0 * kPi * kPi);
  }
  mean_u /= seeds;
  const double mult = std::exp(0.5 * cfg.tau);  // growth-rate bound c <= 0.5
  const double var = std::pow(mult, 3) * (std::pow(mult, 5) - 1.0) / cfg.n;
  const double band = 5.0 * 0.5 * std::sqrt(var / seeds);
  CHECK(std::abs(mean_u - split(0.1)) < band + 1e-3);
}

TEST_CASE("normalization invariance: doubled u0 and Z with compensated source") {
  // lambda = 2 keeps every rescaling exact in binary floating point
  KsModel a = make_ks_linear();
  KsModel b = a;
  b.initial_u = [base = a.initial_u](const double* x) { return 2.0 * base(x); };
  b.z_u = 2.0 * a.z_u;
  b.f_v = [](double u, double v) { return u / 2.0 - v; };  // same physical source

  SolverConfig cfg;
  cfg.tau = 1e-3;
  cfg.t_end = 5e-3;
  cfg.n = 3000;
  cfg.modes = 6;
  cfg.seed = 99;
  auto ra = run_ks(a, cfg);
  auto rb = run_ks(b, cfg);
  REQUIRE(ra.status.completed);
  REQUIRE(rb.status.completed);
  REQUIRE(ra.series.size() == rb.series.size());
  for (std::size_t i = 0; i < ra.series.size(); ++i) {
    CHECK(ra.series[i].count_u == rb.series[i].count_u);
    CHECK(ra.series[i].count_v == rb.series[i].count_v);
    CHECK(2.0 * ra.series[i].mass_u == rb.series[i].mass_u);  // bit-exact scaling
    CHECK(ra.series[i].mass_v == rb.series[i].mass_v);
  }
  REQUIRE(ra.particles_u);
  REQUIRE(rb.particles_u);
  for (std::int64_t i = 0; i < ra.particles_u->size(); ++i) {
    CHECK(ra.particles_u->position(i)[0] == rb.particles_u->position(i)[0]);
    CHECK(ra.particles_u->position(i)[1] == rb.particles_u->position(i)[1]);
  }
  for (std::int64_t i = 0; i < ra.particles_v->size(); ++i)
    CHECK(ra.particles_v->position(i)[0] == rb.particles_v->position(i)[0]);
}

TEST_CASE("ks snapshots satisfy the mass identity at their step") {
  SolverConfig cfg;
  cfg.tau = 2e-3;
  cfg.t_end = 0.01;
  cfg.n = 2000;
  cfg.modes = 5;
  cfg.seed = 3;
  auto result = run_ks(make_ks_linear(), cfg);
  REQUIRE(result.status.completed);
  for (const auto& snap : result.snapshots) {
    const auto& row = result.series.at(static_cast<std::size_t>(snap.step));
    CHECK(snap.u.mass() == doctest::Approx(row.mass_u).epsilon(1e-12));
    REQUIRE(snap.v);
    CHECK(snap.v->mass() == doctest::Approx(row.mass_v).epsilon(1e-12));
  }
}

TEST_CASE("ks-logistic desk smoke run stays bounded at rate cap 5") {
  SolverConfig cfg;
  cfg.tau = 1e-3;
  cfg.t_end = 0.05;
  cfg.n = 4000;
  cfg.modes = 6;
  cfg.seed = 42;
  auto result = run_ks(make_ks_logistic(), cfg);
  REQUIRE(result.status.completed);
  CHECK(result.series.back().count_u > 0);
  CHECK(result.series.back().count_v > 0);
  CHECK(std::isfinite(result.series.back().mass_u));
}

TEST_CASE("population explosion aborts with a partial, flagged record") {
  ScalarModel m;
  m.name = "explosive";
  m.diffusion = 0.5;
  m.reaction = [](double) { return 1e9; };  // capped to rate_cap / tau
  m.initial = [](const double*) { return 1.0; };
  m.z_mass = 4.0 * kPi * kPi;
  SolverConfig cfg;
  cfg.tau = 0.5;
  cfg.t_end = 1.0;
  cfg.n = 2000;
  cfg.modes = 2;
  auto result = run_scalar(m, cfg);
  CHECK_FALSE(result.status.completed);
  CHECK(result.status.failed_step == 0);
  CHECK(result.status.reason.find("population") != std::string::npos);
  CHECK(result.series.size() == 1);  // the t = 0 row survives
}

TEST_CASE("rate capping is counted in the series") {
  ScalarModel m;
  m.name = "capped";
  m.diffusion = 0.5;
  m.reaction = [](double) { return -1e9; };  // death capped, no explosion
  m.initial = [](const double*) { return 1.0; };
  m.z_mass = 4.0 * kPi * kPi;
  SolverConfig cfg;
  cfg.tau = 0.1;
  cfg.t_end = 0.1;
  cfg.n = 500;
  cfg.modes = 2;
  auto result = run_scalar(m, cfg);
  REQUIRE(result.status.completed);
  CHECK(result.series.back().cap_hits == 500);
  CHECK(result.series.back().count_u < 500);
}
