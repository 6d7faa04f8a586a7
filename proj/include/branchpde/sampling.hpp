#pragma once

#include <cstdint>
#include <functional>

#include "branchpde/particles.hpp"
#include "branchpde/torus.hpp"

namespace branchpde {

using DensityFn = std::function<double(const double*)>;

/// Random-walk Metropolis-Hastings parameters. One independent chain per
/// particle, seeded from (seed, particle index): trivially parallel, no
/// thinning correlations.
struct MhParams {
  double step_scale = 0.8;
  int burn_in = 200;
};

/// Draw n particles approximately i.i.d. from rho0 / integral(rho0) with
/// wrapped Gaussian random-walk proposals. Deterministic in
/// (rho0, n, params, seed), independent of the worker count.
///
/// Throws ModelError when rho0 evaluates negative, or when a chain accepts
/// nothing over its entire burn-in (pathological density).
ParticleSet sample_initial(const TorusDomain& domain, const DensityFn& rho0, std::int64_t n,
                           const MhParams& params, std::uint64_t seed,
                           std::uint64_t population = 0);

/// Exact alternative when a finite sup bound of rho0 is known; used by tests
/// to cross-check MH bias.
ParticleSet sample_rejection(const TorusDomain& domain, const DensityFn& rho0, double sup_bound,
                             std::int64_t n, std::uint64_t seed, std::uint64_t population = 0);

/// Trapezoid-rule integral of u0 over the torus, spectrally accurate for
/// smooth periodic u0. Throws ModelError on a negative sample.
double compute_z(const TorusDomain& domain, const DensityFn& u0,
                 std::size_t quadrature_per_axis = 256);

}  // namespace branchpde
