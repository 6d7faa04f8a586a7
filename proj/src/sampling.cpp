#include "branchpde/sampling.hpp"

#include <atomic>
#include <cmath>

#include "branchpde/errors.hpp"
#include "branchpde/parallel.hpp"
#include "branchpde/rng.hpp"

namespace branchpde {

namespace {

double checked_density(const DensityFn& rho0, const double* x) {
  const double v = rho0(x);
  if (!(v >= 0.0) || !std::isfinite(v))
    throw ModelError("sampling: density evaluated negative or non-finite");
  return v;
}

}  // namespace

ParticleSet sample_initial(const TorusDomain& domain, const DensityFn& rho0, std::int64_t n,
                           const MhParams& params, std::uint64_t seed,
                           std::uint64_t population) {
  if (n < 1) throw std::invalid_argument("sample_initial: n must be >= 1");
  const int d = domain.dim();
  ParticleSet set(domain, n);
  set.resize(n);
  std::atomic<bool> pathological{false};

  par::for_blocks(static_cast<std::size_t>(n), [&](std::size_t, std::size_t begin,
                                                   std::size_t end) {
    std::vector<double> x(d), prop(d);
    for (std::size_t i = begin; i < end; ++i) {
      RngStream stream(seed, StreamTag::kMhInit, population, i, 0);
      for (int j = 0; j < d; ++j)
        x[j] = domain.origin() + domain.length() * stream.uniform();
      double fx = checked_density(rho0, x.data());
      int landed_on_support = 0;
      for (int it = 0; it < params.burn_in; ++it) {
        for (int j = 0; j < d; ++j)
          prop[j] = domain.wrap1(x[j] + params.step_scale * stream.normal());
        const double fp = checked_density(rho0, prop.data());
        // chains on the zero-density plateau keep walking freely; only
        // landings on positive density count toward the pathology check
        const bool accept = (fx == 0.0) ? true : (stream.uniform() * fx < fp);
        if (accept) {
          x = prop;
          fx = fp;
          if (fp > 0.0) ++landed_on_support;
        }
      }
      if (landed_on_support == 0) pathological.store(true, std::memory_order_relaxed);
      double* out = set.position(static_cast<std::int64_t>(i));
      for (int j = 0; j < d; ++j) out[j] = x[j];
      set.lineage_id(static_cast<std::int64_t>(i)) = i;
    }
  });

  if (pathological.load())
    throw ModelError("sample_initial: a chain accepted nothing over its burn-in "
                     "(pathological density)");
  return set;
}

ParticleSet sample_rejection(const TorusDomain& domain, const DensityFn& rho0, double sup_bound,
                             std::int64_t n, std::uint64_t seed, std::uint64_t population) {
  if (n < 1) throw std::invalid_argument("sample_rejection: n must be >= 1");
  if (!(sup_bound > 0.0) || !std::isfinite(sup_bound))
    throw std::invalid_argument("sample_rejection: sup_bound must be positive and finite");
  const int d = domain.dim();
  ParticleSet set(domain, n);
  set.resize(n);

  par::for_blocks(static_cast<std::size_t>(n), [&](std::size_t, std::size_t begin,
                                                   std::size_t end) {
    std::vector<double> x(d);
    for (std::size_t i = begin; i < end; ++i) {
      RngStream stream(seed, StreamTag::kRejectionInit, population, i, 0);
      for (;;) {
        for (int j = 0; j < d; ++j)
          x[j] = domain.origin() + domain.length() * stream.uniform();
        const double f = checked_density(rho0, x.data());
        if (f > sup_bound)
          throw ModelError("sample_rejection: density exceeds the supplied sup bound");
        if (stream.uniform() * sup_bound < f) break;
      }
      double* out = set.position(static_cast<std::int64_t>(i));
      for (int j = 0; j < d; ++j) out[j] = x[j];
      set.lineage_id(static_cast<std::int64_t>(i)) = i;
    }
  });
  return set;
}

double compute_z(const TorusDomain& domain, const DensityFn& u0,
                 std::size_t quadrature_per_axis) {
  const int d = domain.dim();
  const auto pts = domain.uniform_grid(quadrature_per_axis);
  const std::size_t total = pts.size() / d;
  const double cell = std::pow(domain.length() / static_cast<double>(quadrature_per_axis), d);
  const std::size_t blocks = par::block_count(total);
  std::vector<double> partials(blocks, 0.0);
  par::for_blocks(total, [&](std::size_t block, std::size_t begin, std::size_t end) {
    double acc = 0.0;
    for (std::size_t p = begin; p < end; ++p) {
      const double v = u0(pts.data() + p * d);
      if (!(v >= 0.0) || !std::isfinite(v))
        throw ModelError("compute_z: u0 sampled negative or non-finite");
      acc += v;
    }
    partials[block] = acc;
  });
  double sum = 0.0;
  par::tree_combine(blocks, 1, partials.data(), &sum);
  return sum * cell;
}

}  // namespace branchpde
