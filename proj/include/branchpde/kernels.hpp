#pragma once

#include <cstdint>
#include <functional>
#include <span>

#include "branchpde/particles.hpp"
#include "branchpde/rng.hpp"

namespace branchpde {

/// Per-step frozen drift b(x); must return finite vectors for wrapped x
/// (callers guarantee that through the density floor and drift cap).
struct DriftField {
  std::function<void(const double* x, double* velocity)> velocity;
};

/// Per-step frozen growth rate c(x), capped by the caller so |c * tau| stays
/// bounded before exponentiation.
struct RateField {
  std::function<double(const double* x)> rate;
};

/// Euler-Maruyama transport: X* = wrap(X + b(X) tau + sigma sqrt(tau) xi),
/// xi i.i.d. standard normal per coordinate. Population size and lineage ids
/// are unchanged; per-particle noise comes from the stream keyed by
/// (seed, transport tag, population, lineage id, step), so the result is
/// independent of worker count.
ParticleSet sde_propagate(const ParticleSet& particles, double tau, const DriftField& drift,
                          double sigma, std::int64_t step_index, std::uint64_t seed,
                          std::uint64_t population = 0);

/// Hot-path overload with precomputed per-particle drift (size n*dim, or empty
/// for zero drift).
ParticleSet sde_propagate(const ParticleSet& particles, double tau,
                          std::span<const double> drift, double sigma, std::int64_t step_index,
                          std::uint64_t seed, std::uint64_t population = 0);

/// Branching birth-death step. With c_i = rate(X_i):
///   c_i > 0: keep the parent and append K_i ~ Poisson(e^{c_i tau} - 1) copies
///            at the same position;
///   c_i < 0: keep the parent with probability e^{c_i tau};
///   c_i = 0: keep unchanged.
/// Output order: surviving parents in input order, then children grouped by
/// parent in input order; children carry fresh lineage ids hashed from
/// (parent id, step, ordinal). Exceeding population_cap throws BlowupError
/// (<= 0 disables the cap).
ParticleSet birth_death(const ParticleSet& particles, double tau, const RateField& rate,
                        std::int64_t step_index, std::uint64_t seed, std::uint64_t population = 0,
                        std::int64_t population_cap = -1);

ParticleSet birth_death(const ParticleSet& particles, double tau, std::span<const double> rates,
                        std::int64_t step_index, std::uint64_t seed, std::uint64_t population = 0,
                        std::int64_t population_cap = -1);

}  // namespace branchpde
