#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "branchpde/torus.hpp"

namespace branchpde {

class ParticleSet;

/// Per-axis mode index k in {-K..K}: k=0 the constant mode, k>0 cosine,
/// k<0 sine. Modes are stored flattened with axis 0 slowest:
/// flat = sum_j (k_j + K) * (2K+1)^(d-1-j).
struct ModeIndex {
  std::vector<int> k;
};

/// Truncated tensor-product Fourier representation of a density on the torus.
///
/// The per-axis basis is orthonormal on [o, o+L): 1/sqrt(L) for k = 0,
/// sqrt(2/L) cos(w k (x-o)) for k > 0 and sqrt(2/L) sin(w |k| (x-o)) for
/// k < 0, with w = 2 pi / L. Orthonormality makes projection-reconstruction
/// exact on band-limited functions, which the solver and the error metrics
/// rely on. Fields are immutable after construction apart from coefficient
/// assignment by their producers.
class SpectralField {
 public:
  SpectralField(TorusDomain domain, int truncation);

  const TorusDomain& domain() const { return domain_; }
  int truncation() const { return trunc_; }
  std::size_t mode_count() const { return coeffs_.size(); }
  std::span<const double> coeffs() const { return coeffs_; }
  std::span<double> coeffs() { return coeffs_; }

  static std::size_t mode_count(int dim, int truncation);

  std::size_t flat_index(std::span<const int> k) const;
  ModeIndex unflatten(std::size_t flat) const;

  double coeff(std::span<const int> k) const { return coeffs_[flat_index(k)]; }
  double& coeff(std::span<const int> k) { return coeffs_[flat_index(k)]; }

  /// Value of the truncated series at a wrapped point.
  double evaluate(const double* x) const;
  double evaluate(std::span<const double> x) const { return evaluate(x.data()); }

  /// Analytic gradient of the series at a wrapped point.
  void gradient(const double* x, double* out) const;
  std::vector<double> gradient(std::span<const double> x) const {
    std::vector<double> g(domain_.dim());
    gradient(x.data(), g.data());
    return g;
  }

  /// Integral over the torus: only the constant mode contributes.
  double mass() const;

  /// Squared Sobolev norm sum_m (1 + |w k|^2)^(-s) a_m^2; s may have either
  /// sign. Reduces to sum (1+|k|^2)^(-s) a_m^2 on the 2 pi torus.
  double sobolev_norm_sq(double s) const;

  /// Sobolev weight of one flattened mode, shared with the metric module.
  double sobolev_weight(std::size_t flat, double s) const;

  /// Field values over uniform_grid(n), deterministic parallel fill.
  std::vector<double> sample_grid(std::size_t n_per_axis) const;

  bool all_finite() const;

 private:
  TorusDomain domain_;
  int trunc_;
  std::vector<double> coeffs_;
};

/// Tensor basis function psi_m(x) for an arbitrary integer mode vector
/// (not restricted to |k_j| <= K; callers bound it).
double basis_eval(const TorusDomain& domain, std::span<const int> k, const double* x);

/// Gradient of psi_m at x; `out` holds domain.dim() components.
void basis_gradient(const TorusDomain& domain, std::span<const int> k, const double* x,
                    double* out);

/// Fill the 2K+1 per-axis basis values (and optionally derivatives) at
/// coordinate x. Tables are laid out sine modes first: slot K+k holds phi_k.
void basis_axis_tables(const TorusDomain& domain, int truncation, double x, double* values,
                       double* derivatives = nullptr);

/// Fixed-N projection of an empirical measure: a_m = (1/N) sum_i psi_m(X_i).
/// The reduction runs over fixed particle blocks combined pairwise, so the
/// result is independent of the worker count. An empty set projects to the
/// zero field (extinct population).
SpectralField project_particles(const ParticleSet& particles, std::int64_t n_initial,
                                int truncation);

/// Deterministic projection of a pointwise density by trapezoid quadrature on
/// the periodic q^d grid; exact for band-limited f once q >= 2K+2. A q below
/// 4K+2 appends a warning instead of failing.
SpectralField project_function(const TorusDomain& domain,
                               const std::function<double(const double*)>& f, int truncation,
                               std::size_t quadrature_per_axis,
                               std::vector<std::string>* warnings = nullptr);

/// Snapshot format: header "d K L", then (2K+1)^d coefficients in flat order,
/// one per line, 17 significant digits.
void write_coef_file(const std::string& path, const SpectralField& field);
SpectralField read_coef_file(const std::string& path);

}  // namespace branchpde
