#include "branchpde/spectral_field.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "branchpde/errors.hpp"
#include "branchpde/parallel.hpp"
#include "branchpde/particles.hpp"

namespace branchpde {

namespace {

constexpr int kMaxTruncation = 64;

// Chebyshev-style three-term recurrences for cos(k t), sin(k t); fixed
// evaluation order keeps results deterministic, drift is O(K) ulp.
inline void trig_ladder(double t, int kmax, double* coss, double* sins) {
  const double c1 = std::cos(t);
  const double s1 = std::sin(t);
  coss[0] = 1.0;
  sins[0] = 0.0;
  if (kmax >= 1) {
    coss[1] = c1;
    sins[1] = s1;
  }
  const double two_c1 = 2.0 * c1;
  for (int k = 2; k <= kmax; ++k) {
    coss[k] = two_c1 * coss[k - 1] - coss[k - 2];
    sins[k] = two_c1 * sins[k - 1] - sins[k - 2];
  }
}

inline std::size_t ipow(std::size_t base, int exp) {
  std::size_t r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

}  // namespace

SpectralField::SpectralField(TorusDomain domain, int truncation)
    : domain_(std::move(domain)), trunc_(truncation) {
  if (truncation < 1 || truncation > kMaxTruncation)
    throw std::invalid_argument("SpectralField: truncation must be in [1, 64]");
  coeffs_.assign(mode_count(domain_.dim(), truncation), 0.0);
}

std::size_t SpectralField::mode_count(int dim, int truncation) {
  return ipow(static_cast<std::size_t>(2 * truncation + 1), dim);
}

std::size_t SpectralField::flat_index(std::span<const int> k) const {
  if (static_cast<int>(k.size()) != domain_.dim())
    throw std::invalid_argument("flat_index: mode vector length != dim");
  const std::size_t width = 2 * static_cast<std::size_t>(trunc_) + 1;
  std::size_t flat = 0;
  for (int j = 0; j < domain_.dim(); ++j) {
    if (k[j] < -trunc_ || k[j] > trunc_)
      throw std::invalid_argument("flat_index: |k_j| exceeds truncation");
    flat = flat * width + static_cast<std::size_t>(k[j] + trunc_);
  }
  return flat;
}

ModeIndex SpectralField::unflatten(std::size_t flat) const {
  const std::size_t width = 2 * static_cast<std::size_t>(trunc_) + 1;
  ModeIndex m;
  m.k.assign(domain_.dim(), 0);
  for (int j = domain_.dim() - 1; j >= 0; --j) {
    m.k[j] = static_cast<int>(flat % width) - trunc_;
    flat /= width;
  }
  return m;
}

void basis_axis_tables(const TorusDomain& domain, int truncation, double x, double* values,
                       double* derivatives) {
  const double omega = kTwoPi / domain.length();
  const double t = omega * (x - domain.origin());
  double coss[kMaxTruncation + 1];
  double sins[kMaxTruncation + 1];
  trig_ladder(t, truncation, coss, sins);
  const double norm0 = 1.0 / std::sqrt(domain.length());
  const double norm = std::sqrt(2.0 / domain.length());
  values[truncation] = norm0;
  if (derivatives) derivatives[truncation] = 0.0;
  for (int k = 1; k <= truncation; ++k) {
    values[truncation + k] = norm * coss[k];
    values[truncation - k] = norm * sins[k];
    if (derivatives) {
      const double wk = omega * static_cast<double>(k);
      derivatives[truncation + k] = -wk * norm * sins[k];
      derivatives[truncation - k] = wk * norm * coss[k];
    }
  }
}

double basis_eval(const TorusDomain& domain, std::span<const int> k, const double* x) {
  if (static_cast<int>(k.size()) != domain.dim())
    throw std::invalid_argument("basis_eval: mode vector length != dim");
  const double omega = kTwoPi / domain.length();
  const double norm0 = 1.0 / std::sqrt(domain.length());
  const double norm = std::sqrt(2.0 / domain.length());
  double v = 1.0;
  for (int j = 0; j < domain.dim(); ++j) {
    const double t = omega * (x[j] - domain.origin());
    if (k[j] == 0)
      v *= norm0;
    else if (k[j] > 0)
      v *= norm * std::cos(k[j] * t);
    else
      v *= norm * std::sin(-k[j] * t);
  }
  return v;
}

void basis_gradient(const TorusDomain& domain, std::span<const int> k, const double* x,
                    double* out) {
  if (static_cast<int>(k.size()) != domain.dim())
    throw std::invalid_argument("basis_gradient: mode vector length != dim");
  const double omega = kTwoPi / domain.length();
  const double norm0 = 1.0 / std::sqrt(domain.length());
  const double norm = std::sqrt(2.0 / domain.length());
  const int d = domain.dim();
  for (int l = 0; l < d; ++l) {
    double v = 1.0;
    for (int j = 0; j < d; ++j) {
      const double t = omega * (x[j] - domain.origin());
      const double wk = omega * std::abs(k[j]);
      if (j == l) {
        if (k[j] == 0)
          v = 0.0;
        else if (k[j] > 0)
          v *= -wk * norm * std::sin(k[j] * t);
        else
          v *= wk * norm * std::cos(-k[j] * t);
      } else {
        if (k[j] == 0)
          v *= norm0;
        else if (k[j] > 0)
          v *= norm * std::cos(k[j] * t);
        else
          v *= norm * std::sin(-k[j] * t);
      }
    }
    out[l] = v;
  }
}

double SpectralField::evaluate(const double* x) const {
  const int d = domain_.dim();
  const std::size_t width = 2 * static_cast<std::size_t>(trunc_) + 1;
  double tab[3][2 * kMaxTruncation + 1];
  if (d <= 3) {
    for (int j = 0; j < d; ++j) basis_axis_tables(domain_, trunc_, x[j], tab[j]);
    if (d == 1) {
      double acc = 0.0;
      for (std::size_t m = 0; m < width; ++m) acc += coeffs_[m] * tab[0][m];
      return acc;
    }
    if (d == 2) {
      double acc = 0.0;
      for (std::size_t i = 0; i < width; ++i) {
        const double* row = coeffs_.data() + i * width;
        double partial = 0.0;
        for (std::size_t m = 0; m < width; ++m) partial += row[m] * tab[1][m];
        acc += tab[0][i] * partial;
      }
      return acc;
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < width; ++i)
      for (std::size_t j = 0; j < width; ++j) {
        const double* row = coeffs_.data() + (i * width + j) * width;
        double partial = 0.0;
        for (std::size_t m = 0; m < width; ++m) partial += row[m] * tab[2][m];
        acc += tab[0][i] * tab[1][j] * partial;
      }
    return acc;
  }
  // generic dimension: contract the last axis repeatedly
  std::vector<double> table(width);
  std::vector<double> work(coeffs_.begin(), coeffs_.end());
  std::size_t size = work.size();
  for (int j = d - 1; j >= 0; --j) {
    basis_axis_tables(domain_, trunc_, x[j], table.data());
    const std::size_t rows = size / width;
    for (std::size_t r = 0; r < rows; ++r) {
      double partial = 0.0;
      for (std::size_t m = 0; m < width; ++m) partial += work[r * width + m] * table[m];
      work[r] = partial;
    }
    size = rows;
  }
  return work[0];
}

void SpectralField::gradient(const double* x, double* out) const {
  const int d = domain_.dim();
  const std::size_t width = 2 * static_cast<std::size_t>(trunc_) + 1;
  if (d <= 3) {
    double tab[3][2 * kMaxTruncation + 1];
    double dtab[3][2 * kMaxTruncation + 1];
    for (int j = 0; j < d; ++j) basis_axis_tables(domain_, trunc_, x[j], tab[j], dtab[j]);
    for (int l = 0; l < d; ++l) {
      double acc = 0.0;
      if (d == 1) {
        for (std::size_t m = 0; m < width; ++m) acc += coeffs_[m] * dtab[0][m];
      } else if (d == 2) {
        const double* t0 = (l == 0) ? dtab[0] : tab[0];
        const double* t1 = (l == 1) ? dtab[1] : tab[1];
        for (std::size_t i = 0; i < width; ++i) {
          const double* row = coeffs_.data() + i * width;
          double partial = 0.0;
          for (std::size_t m = 0; m < width; ++m) partial += row[m] * t1[m];
          acc += t0[i] * partial;
        }
      } else {
        const double* t0 = (l == 0) ? dtab[0] : tab[0];
        const double* t1 = (l == 1) ? dtab[1] : tab[1];
        const double* t2 = (l == 2) ? dtab[2] : tab[2];
        for (std::size_t i = 0; i < width; ++i)
          for (std::size_t j = 0; j < width; ++j) {
            const double* row = coeffs_.data() + (i * width + j) * width;
            double partial = 0.0;
            for (std::size_t m = 0; m < width; ++m) partial += row[m] * t2[m];
            acc += t0[i] * t1[j] * partial;
          }
      }
      out[l] = acc;
    }
    return;
  }
  // generic dimension, one contraction pass per component
  std::vector<double> table(width);
  for (int l = 0; l < d; ++l) {
    std::vector<double> work(coeffs_.begin(), coeffs_.end());
    std::size_t size = work.size();
    for (int j = d - 1; j >= 0; --j) {
      basis_axis_tables(domain_, trunc_, x[j], table.data(), nullptr);
      if (j == l) {
        std::vector<double> deriv(width);
        basis_axis_tables(domain_, trunc_, x[j], table.data(), deriv.data());
        table = deriv;
      }
      const std::size_t rows = size / width;
      for (std::size_t r = 0; r < rows; ++r) {
        double partial = 0.0;
        for (std::size_t m = 0; m < width; ++m) partial += work[r * width + m] * table[m];
        work[r] = partial;
      }
      size = rows;
    }
    out[l] = work[0];
  }
}

double SpectralField::mass() const {
  std::vector<int> zero(domain_.dim(), 0);
  const double root_volume = std::pow(domain_.length(), 0.5 * domain_.dim());
  return coeffs_[flat_index(zero)] * root_volume;
}

double SpectralField::sobolev_weight(std::size_t flat, double s) const {
  const std::size_t width = 2 * static_cast<std::size_t>(trunc_) + 1;
  const double omega = kTwoPi / domain_.length();
  double ksq = 0.0;
  for (int j = 0; j < domain_.dim(); ++j) {
    const int k = static_cast<int>(flat % width) - trunc_;
    flat /= width;
    ksq += (omega * k) * (omega * k);
  }
  return std::pow(1.0 + ksq, -s);
}

double SpectralField::sobolev_norm_sq(double s) const {
  double acc = 0.0;
  for (std::size_t m = 0; m < coeffs_.size(); ++m)
    acc += sobolev_weight(m, s) * coeffs_[m] * coeffs_[m];
  return acc;
}

std::vector<double> SpectralField::sample_grid(std::size_t n_per_axis) const {
  const auto pts = domain_.uniform_grid(n_per_axis);
  const std::size_t total = pts.size() / domain_.dim();
  std::vector<double> out(total);
  const int d = domain_.dim();
  par::for_blocks(total, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) out[p] = evaluate(pts.data() + p * d);
  });
  return out;
}

bool SpectralField::all_finite() const {
  for (double c : coeffs_)
    if (!std::isfinite(c)) return false;
  return true;
}

namespace {

// Shared accumulation core: projects weighted point masses onto the modes
// with fixed-block pairwise reduction.
template <typename PointFn, typename WeightFn>
std::vector<double> accumulate_modes(const TorusDomain& domain, int truncation, std::size_t count,
                                     PointFn&& point, WeightFn&& weight) {
  const int d = domain.dim();
  const std::size_t width = 2 * static_cast<std::size_t>(truncation) + 1;
  const std::size_t modes = SpectralField::mode_count(d, truncation);
  const std::size_t blocks = count == 0 ? 0 : par::block_count(count);
  std::vector<double> partials(blocks * modes, 0.0);

  par::for_blocks(count, [&](std::size_t block, std::size_t begin, std::size_t end) {
    double* local = partials.data() + block * modes;
    double tab[3][2 * kMaxTruncation + 1];
    std::vector<double> gtab;  // generic-d scratch
    if (d > 3) gtab.resize(static_cast<std::size_t>(d) * width);
    for (std::size_t p = begin; p < end; ++p) {
      const double* x = point(p);
      const double w = weight(p, x);
      if (w == 0.0) continue;
      if (d == 1) {
        basis_axis_tables(domain, truncation, x[0], tab[0]);
        for (std::size_t m = 0; m < width; ++m) local[m] += w * tab[0][m];
      } else if (d == 2) {
        basis_axis_tables(domain, truncation, x[0], tab[0]);
        basis_axis_tables(domain, truncation, x[1], tab[1]);
        for (std::size_t i = 0; i < width; ++i) {
          const double wi = w * tab[0][i];
          double* row = local + i * width;
          for (std::size_t m = 0; m < width; ++m) row[m] += wi * tab[1][m];
        }
      } else if (d == 3) {
        basis_axis_tables(domain, truncation, x[0], tab[0]);
        basis_axis_tables(domain, truncation, x[1], tab[1]);
        basis_axis_tables(domain, truncation, x[2], tab[2]);
        for (std::size_t i = 0; i < width; ++i)
          for (std::size_t j = 0; j < width; ++j) {
            const double wij = w * tab[0][i] * tab[1][j];
            double* row = local + (i * width + j) * width;
            for (std::size_t m = 0; m < width; ++m) row[m] += wij * tab[2][m];
          }
      } else {
        for (int j = 0; j < d; ++j)
          basis_axis_tables(domain, truncation, x[j], gtab.data() + j * width);
        std::vector<std::size_t> idx(d, 0);
        for (std::size_t m = 0; m < modes; ++m) {
          double v = w;
          for (int j = 0; j < d; ++j) v *= gtab[j * width + idx[j]];
          local[m] += v;
          for (int j = d - 1; j >= 0; --j) {
            if (++idx[j] < width) break;
            idx[j] = 0;
          }
        }
      }
    }
  });

  std::vector<double> result(modes, 0.0);
  par::tree_combine(blocks, modes, partials.data(), result.data());
  return result;
}

}  // namespace

SpectralField project_particles(const ParticleSet& particles, std::int64_t n_initial,
                                int truncation) {
  if (n_initial <= 0) throw std::invalid_argument("project_particles: n_initial must be > 0");
  const TorusDomain& domain = particles.domain();
  SpectralField field(domain, truncation);
  const std::size_t count = static_cast<std::size_t>(particles.size());
  if (count == 0) return field;  // extinct population: zero field
  const int d = domain.dim();
  const double inv_n = 1.0 / static_cast<double>(n_initial);
  auto sums = accumulate_modes(
      domain, truncation, count,
      [&](std::size_t p) { return particles.positions().data() + p * d; },
      [](std::size_t, const double*) { return 1.0; });
  for (std::size_t m = 0; m < sums.size(); ++m) field.coeffs()[m] = sums[m] * inv_n;
  return field;
}

SpectralField project_function(const TorusDomain& domain,
                               const std::function<double(const double*)>& f, int truncation,
                               std::size_t quadrature_per_axis,
                               std::vector<std::string>* warnings) {
  if (quadrature_per_axis < 1)
    throw std::invalid_argument("project_function: quadrature_per_axis must be >= 1");
  if (quadrature_per_axis < static_cast<std::size_t>(4 * truncation + 2) && warnings)
    warnings->push_back("project_function: quadrature " + std::to_string(quadrature_per_axis) +
                        " per axis is below 4K+2 = " + std::to_string(4 * truncation + 2) +
                        "; coefficients may alias");
  SpectralField field(domain, truncation);
  const int d = domain.dim();
  const auto pts = domain.uniform_grid(quadrature_per_axis);
  const std::size_t total = pts.size() / d;
  const double cell = std::pow(domain.length() / static_cast<double>(quadrature_per_axis), d);
  auto sums = accumulate_modes(
      domain, truncation, total, [&](std::size_t p) { return pts.data() + p * d; },
      [&](std::size_t, const double* x) { return f(x) * cell; });
  for (std::size_t m = 0; m < sums.size(); ++m) field.coeffs()[m] = sums[m];
  return field;
}

void write_coef_file(const std::string& path, const SpectralField& field) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for write: " + path);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", field.domain().length());
  out << field.domain().dim() << ' ' << field.truncation() << ' ' << buf << '\n';
  for (double c : field.coeffs()) {
    std::snprintf(buf, sizeof(buf), "%.17g", c);
    out << buf << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

SpectralField read_coef_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  int d = 0, trunc = 0;
  double length = 0.0;
  if (!(in >> d >> trunc >> length)) throw IoError("bad coef header: " + path);
  SpectralField field(TorusDomain(d, length), trunc);
  for (auto& c : field.coeffs())
    if (!(in >> c)) throw IoError("truncated coef file: " + path);
  return field;
}

}  // namespace branchpde
