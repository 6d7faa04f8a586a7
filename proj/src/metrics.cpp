#include "branchpde/metrics.hpp"

#include <cmath>

#include "branchpde/errors.hpp"

namespace branchpde {

double rel_l2(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("rel_l2: size mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    num += d * d;
    den += b[i] * b[i];
  }
  if (den == 0.0) throw std::invalid_argument("rel_l2: reference has zero norm");
  return std::sqrt(num / den);
}

double rel_l2_grid(const GridField& a, const GridField& b) {
  if (a.n != b.n || !(a.domain == b.domain))
    throw std::invalid_argument("rel_l2_grid: grids differ");
  return rel_l2(a.values, b.values);
}

double h_minus_s_distance(const SpectralField& f, const SpectralField& g, double s) {
  if (f.truncation() != g.truncation() || !(f.domain() == g.domain()))
    throw std::invalid_argument("h_minus_s_distance: truncation or domain mismatch");
  double acc = 0.0;
  const auto fa = f.coeffs();
  const auto ga = g.coeffs();
  for (std::size_t m = 0; m < fa.size(); ++m) {
    const double d = fa[m] - ga[m];
    acc += f.sobolev_weight(m, s) * d * d;
  }
  return std::sqrt(acc);
}

TimeSeries mass_series(const std::vector<SeriesRow>& series, char which) {
  if (which != 'u' && which != 'v')
    throw std::invalid_argument("mass_series: which must be 'u' or 'v'");
  TimeSeries ts;
  ts.label = which == 'u' ? "mass_u" : "mass_v";
  ts.t.reserve(series.size());
  ts.value.reserve(series.size());
  for (const auto& row : series) {
    ts.t.push_back(row.t);
    ts.value.push_back(which == 'u' ? row.mass_u : row.mass_v);
  }
  return ts;
}

double exact_mass_case2(double t) {
  const double pi_sq = std::numbers::pi_v<double> * std::numbers::pi_v<double>;
  return pi_sq * (1.0 + 7.0 * std::exp(-t));
}

SlopeFit fit_convergence_slope(std::span<const std::pair<double, double>> pairs) {
  if (pairs.size() < 3)
    throw std::invalid_argument("fit_convergence_slope: need at least 3 (N, error) pairs");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  double first_x = 0.0;
  bool distinct = false;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto [n, e] = pairs[i];
    if (!(n > 0.0) || !(e > 0.0))
      throw std::invalid_argument("fit_convergence_slope: entries must be positive");
    const double x = std::log(n);
    const double y = std::log(e);
    if (i == 0)
      first_x = x;
    else if (x != first_x)
      distinct = true;
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  if (!distinct)
    throw std::invalid_argument("fit_convergence_slope: need at least two distinct N");
  const auto n = static_cast<double>(pairs.size());
  const double denom = n * sxx - sx * sx;
  SlopeFit fit;
  fit.slope = (n * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / n;
  double ss = 0.0;
  for (const auto& [nn, e] : pairs) {
    const double r = std::log(e) - (fit.intercept + fit.slope * std::log(nn));
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / n);
  return fit;
}

}  // namespace branchpde
