#include "branchpde/rng.hpp"

#include <stdexcept>

namespace branchpde {

namespace {

std::int64_t poisson_inversion(double lambda, RngStream& stream) {
  const double u = stream.uniform();
  double p = std::exp(-lambda);
  double cdf = p;
  std::int64_t k = 0;
  while (u > cdf) {
    ++k;
    p *= lambda / static_cast<double>(k);
    cdf += p;
    if (p == 0.0) break;  // cdf saturated in double precision
  }
  return k;
}

// Transformed rejection with squeeze (Hoermann 1993), exact for lambda >= 10.
std::int64_t poisson_ptrs(double lambda, RngStream& stream) {
  const double slam = std::sqrt(lambda);
  const double loglam = std::log(lambda);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double v_r = 0.9277 - 3.6224 / (b - 2.0);

  for (;;) {
    const double u = stream.uniform() - 0.5;
    const double v = stream.uniform();
    const double us = 0.5 - std::abs(u);
    const auto k = static_cast<std::int64_t>(std::floor((2.0 * a / us + b) * u + lambda + 0.43));
    if (us >= 0.07 && v <= v_r) return k;
    if (k < 0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
        -lambda + static_cast<double>(k) * loglam - std::lgamma(static_cast<double>(k) + 1.0))
      return k;
  }
}

}  // namespace

std::int64_t sample_poisson(double lambda, RngStream& stream) {
  if (!std::isfinite(lambda) || lambda < 0.0)
    throw std::invalid_argument("sample_poisson: lambda must be finite and >= 0");
  if (lambda == 0.0) return 0;
  if (lambda <= 10.0) return poisson_inversion(lambda, stream);
  return poisson_ptrs(lambda, stream);
}

}  // namespace branchpde
