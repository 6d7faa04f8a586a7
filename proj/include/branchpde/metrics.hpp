#pragma once

#include <span>
#include <string>
#include <vector>

#include "branchpde/fd_reference.hpp"
#include "branchpde/run_types.hpp"
#include "branchpde/spectral_field.hpp"

namespace branchpde {

struct TimeSeries {
  std::vector<double> t;
  std::vector<double> value;
  std::string label;
};

/// ||A - B||_2 / ||B||_2 over grid values; B is the reference.
double rel_l2(std::span<const double> a, std::span<const double> b);
double rel_l2_grid(const GridField& a, const GridField& b);

/// sqrt( sum_m (1 + |k|^2)^(-s) (a_m - b_m)^2 ); a metric on fixed-K
/// coefficient space. Propositionally meaningful for s > d/2 + 1.
double h_minus_s_distance(const SpectralField& f, const SpectralField& g, double s);

/// Extract the mass estimates of one population from recorded series rows.
TimeSeries mass_series(const std::vector<SeriesRow>& series, char which);

/// Closed form for the Case 2 chemical mass: M(t) = pi^2 + 7 pi^2 e^{-t},
/// the solution of Mdot = -M + pi^2 with M(0) = 8 pi^2.
double exact_mass_case2(double t);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // rms residual of the log-log fit
};

/// Least-squares fit of log(error) against log(N). Requires >= 3 pairs with
/// positive entries and at least two distinct N.
SlopeFit fit_convergence_slope(std::span<const std::pair<double, double>> pairs);

}  // namespace branchpde
