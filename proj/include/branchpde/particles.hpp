#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "branchpde/torus.hpp"

namespace branchpde {

/// Variable-size particle population with the fixed initial count N kept as
/// the normalization constant. Positions are stored flat (particle-major,
/// dim entries each) and are always wrapped into the domain. Lineage ids key
/// the per-particle RNG streams: roots get 0..N-1, children a 64-bit hash of
/// (parent id, step, ordinal).
class ParticleSet {
 public:
  ParticleSet(TorusDomain domain, std::int64_t n_initial)
      : domain_(std::move(domain)), n_initial_(n_initial) {
    if (n_initial < 1) throw std::invalid_argument("ParticleSet: n_initial must be >= 1");
  }

  const TorusDomain& domain() const { return domain_; }
  int dim() const { return domain_.dim(); }
  std::int64_t n_initial() const { return n_initial_; }
  std::int64_t size() const { return static_cast<std::int64_t>(ids_.size()); }

  std::span<const double> positions() const { return pos_; }
  std::span<double> positions() { return pos_; }
  std::span<const std::uint64_t> lineage_ids() const { return ids_; }

  const double* position(std::int64_t i) const { return pos_.data() + i * dim(); }
  double* position(std::int64_t i) { return pos_.data() + i * dim(); }

  void reserve(std::int64_t n) {
    pos_.reserve(n * dim());
    ids_.reserve(n);
  }

  void resize(std::int64_t n) {
    pos_.resize(n * dim());
    ids_.resize(n);
  }

  void append(const double* x, std::uint64_t lineage_id) {
    pos_.insert(pos_.end(), x, x + dim());
    ids_.push_back(lineage_id);
  }

  std::uint64_t lineage_id(std::int64_t i) const { return ids_[i]; }
  std::uint64_t& lineage_id(std::int64_t i) { return ids_[i]; }

  /// Z * (|S| / N); pure count arithmetic, no accumulation over particles.
  /// Grouped so that a full population returns Z bit-exactly.
  double total_mass_estimate(double z_mass) const {
    return z_mass * (static_cast<double>(size()) / static_cast<double>(n_initial_));
  }

 private:
  TorusDomain domain_;
  std::int64_t n_initial_;
  std::vector<double> pos_;
  std::vector<std::uint64_t> ids_;
};

}  // namespace branchpde
