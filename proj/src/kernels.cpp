#include "branchpde/kernels.hpp"

#include <cmath>
#include <string>

#include "branchpde/errors.hpp"
#include "branchpde/parallel.hpp"

namespace branchpde {

namespace {

std::string format_point(const double* x, int d) {
  std::string s = "(";
  for (int j = 0; j < d; ++j) s += (j ? ", " : "") + std::to_string(x[j]);
  return s + ")";
}

ParticleSet propagate_impl(const ParticleSet& particles, double tau,
                           const std::function<void(std::int64_t, const double*, double*)>& drift_at,
                           double sigma, std::int64_t step_index, std::uint64_t seed,
                           std::uint64_t population) {
  if (!(tau > 0.0)) throw std::invalid_argument("sde_propagate: tau must be > 0");
  if (sigma < 0.0) throw std::invalid_argument("sde_propagate: sigma must be >= 0");
  const TorusDomain& domain = particles.domain();
  const int d = domain.dim();
  const double noise = sigma * std::sqrt(tau);

  ParticleSet out(domain, particles.n_initial());
  out.resize(particles.size());

  par::for_blocks(static_cast<std::size_t>(particles.size()),
                  [&](std::size_t, std::size_t begin, std::size_t end) {
                    std::vector<double> b(d, 0.0);
                    for (std::size_t i = begin; i < end; ++i) {
                      const auto idx = static_cast<std::int64_t>(i);
                      const double* x = particles.position(idx);
                      drift_at(idx, x, b.data());
                      for (int j = 0; j < d; ++j)
                        if (!std::isfinite(b[j]))
                          throw BlowupError("sde_propagate: non-finite drift at particle " +
                                            format_point(x, d) +
                                            " (density floor misconfigured?)");
                      RngStream stream(seed, StreamTag::kTransport, population,
                                       particles.lineage_id(idx),
                                       static_cast<std::uint64_t>(step_index));
                      double* y = out.position(idx);
                      for (int j = 0; j < d; ++j)
                        y[j] = domain.wrap1(x[j] + b[j] * tau + noise * stream.normal());
                      out.lineage_id(idx) = particles.lineage_id(idx);
                    }
                  });
  return out;
}

}  // namespace

ParticleSet sde_propagate(const ParticleSet& particles, double tau, const DriftField& drift,
                          double sigma, std::int64_t step_index, std::uint64_t seed,
                          std::uint64_t population) {
  if (drift.velocity)
    return propagate_impl(
        particles, tau,
        [&](std::int64_t, const double* x, double* b) { drift.velocity(x, b); }, sigma,
        step_index, seed, population);
  return propagate_impl(
      particles, tau,
      [d = particles.dim()](std::int64_t, const double*, double* b) {
        for (int j = 0; j < d; ++j) b[j] = 0.0;
      },
      sigma, step_index, seed, population);
}

ParticleSet sde_propagate(const ParticleSet& particles, double tau,
                          std::span<const double> drift, double sigma, std::int64_t step_index,
                          std::uint64_t seed, std::uint64_t population) {
  const int d = particles.dim();
  if (drift.empty())
    return sde_propagate(particles, tau, DriftField{}, sigma, step_index, seed, population);
  if (drift.size() != static_cast<std::size_t>(particles.size()) * d)
    throw std::invalid_argument("sde_propagate: drift array size mismatch");
  return propagate_impl(
      particles, tau,
      [&drift, d](std::int64_t i, const double*, double* b) {
        for (int j = 0; j < d; ++j) b[j] = drift[i * d + j];
      },
      sigma, step_index, seed, population);
}

namespace {

ParticleSet birth_death_impl(const ParticleSet& particles, double tau,
                             const std::function<double(std::int64_t, const double*)>& rate_at,
                             std::int64_t step_index, std::uint64_t seed, std::uint64_t population,
                             std::int64_t population_cap) {
  if (!(tau > 0.0)) throw std::invalid_argument("birth_death: tau must be > 0");
  const auto n = particles.size();

  std::vector<std::uint8_t> survive(n, 0);
  std::vector<std::int64_t> births(n, 0);

  par::for_blocks(static_cast<std::size_t>(n), [&](std::size_t, std::size_t begin,
                                                   std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto idx = static_cast<std::int64_t>(i);
      const double c = rate_at(idx, particles.position(idx));
      if (!std::isfinite(c))
        throw std::invalid_argument("birth_death: non-finite rate (rate capping missing?)");
      if (c > 0.0) {
        RngStream stream(seed, StreamTag::kBranch, population, particles.lineage_id(idx),
                         static_cast<std::uint64_t>(step_index));
        survive[i] = 1;
        births[i] = sample_poisson(std::expm1(c * tau), stream);
      } else if (c < 0.0) {
        RngStream stream(seed, StreamTag::kBranch, population, particles.lineage_id(idx),
                         static_cast<std::uint64_t>(step_index));
        survive[i] = stream.bernoulli(std::exp(c * tau)) ? 1 : 0;
      } else {
        survive[i] = 1;  // c == 0: kept unchanged, no draw
      }
    }
  });

  std::int64_t total = 0;
  for (std::int64_t i = 0; i < n; ++i) total += survive[i] + births[i];
  if (population_cap > 0 && total > population_cap)
    throw BlowupError("birth_death: population " + std::to_string(total) +
                      " exceeds cap " + std::to_string(population_cap) +
                      " at step " + std::to_string(step_index));

  ParticleSet out(particles.domain(), particles.n_initial());
  out.reserve(total);
  for (std::int64_t i = 0; i < n; ++i)
    if (survive[i]) out.append(particles.position(i), particles.lineage_id(i));
  for (std::int64_t i = 0; i < n; ++i) {
    const double* x = particles.position(i);
    for (std::int64_t c = 0; c < births[i]; ++c)
      out.append(x, mix64(particles.lineage_id(i), static_cast<std::uint64_t>(step_index),
                          static_cast<std::uint64_t>(c)));
  }
  return out;
}

}  // namespace

ParticleSet birth_death(const ParticleSet& particles, double tau, const RateField& rate,
                        std::int64_t step_index, std::uint64_t seed, std::uint64_t population,
                        std::int64_t population_cap) {
  if (!rate.rate) throw std::invalid_argument("birth_death: rate field is empty");
  return birth_death_impl(
      particles, tau, [&](std::int64_t, const double* x) { return rate.rate(x); }, step_index,
      seed, population, population_cap);
}

ParticleSet birth_death(const ParticleSet& particles, double tau, std::span<const double> rates,
                        std::int64_t step_index, std::uint64_t seed, std::uint64_t population,
                        std::int64_t population_cap) {
  if (rates.size() != static_cast<std::size_t>(particles.size()))
    throw std::invalid_argument("birth_death: rate array size mismatch");
  return birth_death_impl(
      particles, tau, [&rates](std::int64_t i, const double*) { return rates[i]; }, step_index,
      seed, population, population_cap);
}

}  // namespace branchpde
