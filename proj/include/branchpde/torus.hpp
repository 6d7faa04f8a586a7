#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "branchpde/errors.hpp"

namespace branchpde {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi_v<double>;

/// Periodic box [origin, origin+length)^dim with equal side length per axis.
///
/// All coordinates handled by the library are kept wrapped into the canonical
/// interval; wrap() is idempotent and periodic: wrap(x + length*k) == wrap(x)
/// for integer k (up to floating rounding at the seam, where values within one
/// ulp of length may land on origin).
class TorusDomain {
 public:
  TorusDomain(int dim, double length = kTwoPi, double origin = 0.0)
      : dim_(dim), length_(length), origin_(origin) {
    if (dim < 1) throw std::invalid_argument("TorusDomain: dim must be >= 1");
    if (!(length > 0.0)) throw std::invalid_argument("TorusDomain: length must be > 0");
    if (!std::isfinite(length) || !std::isfinite(origin))
      throw std::invalid_argument("TorusDomain: non-finite geometry");
  }

  int dim() const { return dim_; }
  double length() const { return length_; }
  double origin() const { return origin_; }
  double volume() const { return std::pow(length_, dim_); }

  /// Reduce one coordinate into [origin, origin+length).
  double wrap1(double x) const {
    if (!std::isfinite(x)) throw BlowupError("wrap: non-finite coordinate (corrupted particle state)");
    double y = x - origin_;
    y -= length_ * std::floor(y / length_);
    // floor-based reduction can round up to exactly length at the seam
    if (y >= length_) y -= length_;
    if (y < 0.0) y = 0.0;
    return y + origin_;
  }

  /// Wrap a point in place; `x` holds dim() coordinates.
  void wrap(double* x) const {
    for (int j = 0; j < dim_; ++j) x[j] = wrap1(x[j]);
  }

  std::vector<double> wrap(std::vector<double> x) const {
    wrap(x.data());
    return x;
  }

  /// Signed minimum-image displacement a - b per axis, each in [-length/2, length/2).
  void min_image(const double* a, const double* b, double* out) const {
    for (int j = 0; j < dim_; ++j) {
      double d = a[j] - b[j];
      d -= length_ * std::floor(d / length_ + 0.5);
      out[j] = d;
    }
  }

  /// Squared minimum-image distance between two points.
  double dist_sq(const double* a, const double* b) const {
    double s = 0.0;
    for (int j = 0; j < dim_; ++j) {
      double d = a[j] - b[j];
      d -= length_ * std::floor(d / length_ + 0.5);
      s += d * d;
    }
    return s;
  }

  /// Cell-corner uniform grid: n^dim points x_i = origin + i*h, h = length/n,
  /// flattened row-major (axis 0 slowest, last axis fastest). No point is
  /// duplicated at the periodic seam.
  std::vector<double> uniform_grid(std::size_t n_per_axis) const {
    if (n_per_axis == 0) throw std::invalid_argument("uniform_grid: n_per_axis must be >= 1");
    const double h = length_ / static_cast<double>(n_per_axis);
    std::size_t total = 1;
    for (int j = 0; j < dim_; ++j) total *= n_per_axis;
    std::vector<double> pts(total * static_cast<std::size_t>(dim_));
    std::vector<std::size_t> idx(dim_, 0);
    for (std::size_t p = 0; p < total; ++p) {
      for (int j = 0; j < dim_; ++j)
        pts[p * dim_ + j] = origin_ + static_cast<double>(idx[j]) * h;
      for (int j = dim_ - 1; j >= 0; --j) {
        if (++idx[j] < n_per_axis) break;
        idx[j] = 0;
      }
    }
    return pts;
  }

  bool operator==(const TorusDomain& o) const {
    return dim_ == o.dim_ && length_ == o.length_ && origin_ == o.origin_;
  }

 private:
  int dim_;
  double length_;
  double origin_;
};

}  // namespace branchpde
