#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace branchpde {

/// Philox4x64-10 counter-based generator (Salmon et al., Random123 family).
///
/// Every random draw in the library comes from a stream addressed by
/// (seed, kernel tag, lineage id, step index); streams are stateless with
/// respect to each other, so per-particle work can be scheduled on any number
/// of workers without changing a single drawn bit.
namespace philox {

struct Block {
  std::array<std::uint64_t, 4> v;
};

inline void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi, std::uint64_t& lo) {
  unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
  hi = static_cast<std::uint64_t>(p >> 64);
  lo = static_cast<std::uint64_t>(p);
}

inline Block generate(std::array<std::uint64_t, 4> ctr, std::array<std::uint64_t, 2> key) {
  constexpr std::uint64_t kMul0 = 0xD2E7470EE14C6C93ULL;
  constexpr std::uint64_t kMul1 = 0xCA5A826395121157ULL;
  constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
  constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;
  for (int round = 0; round < 10; ++round) {
    std::uint64_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return Block{ctr};
}

}  // namespace philox

/// 64-bit mixer used to derive child lineage ids from (parent, step, ordinal).
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return mix64(mix64(mix64(a) ^ b) ^ c);
}

/// Kernel tags keeping independent streams independent across pipeline stages.
enum class StreamTag : std::uint64_t {
  kMhInit = 1,
  kRejectionInit = 2,
  kTransport = 3,
  kBranch = 4,
};

/// One addressed random stream. Draws are buffered four 64-bit words at a
/// time; the in-stream position advances a dedicated counter word, so a
/// stream may produce any number of values.
class RngStream {
 public:
  RngStream(std::uint64_t seed, StreamTag tag, std::uint64_t population,
            std::uint64_t lineage_id, std::uint64_t step_index)
      : key_{seed, static_cast<std::uint64_t>(tag) | (population << 32)},
        base_{lineage_id, step_index, 0, 0} {}

  /// Raw counter-mode constructor (tests, key-derivation utilities).
  RngStream(std::array<std::uint64_t, 2> key, std::array<std::uint64_t, 4> counter)
      : key_(key), base_(counter) {}

  std::uint64_t next_u64() {
    if (pos_ == 4) {
      auto ctr = base_;
      ctr[2] = block_index_++;
      buffer_ = philox::generate(ctr, key_);
      pos_ = 0;
    }
    return buffer_.v[pos_++];
  }

  /// Uniform double in [0, 1), 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; the paired value is cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi_v<double> * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  /// Bernoulli trial with success probability p.
  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::array<std::uint64_t, 2> key_;
  std::array<std::uint64_t, 4> base_;
  std::uint64_t block_index_ = 0;
  philox::Block buffer_{};
  int pos_ = 4;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

/// Exact Poisson(lambda) sampling: sequential-search inversion for small
/// lambda, Hoermann's transformed-rejection (PTRS) above; no normal
/// approximation anywhere.
std::int64_t sample_poisson(double lambda, RngStream& stream);

}  // namespace branchpde
