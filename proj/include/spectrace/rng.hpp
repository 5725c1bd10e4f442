#pragma once

#include <cmath>
#include <cstdint>

#include "spectrace/util.hpp"

namespace spectrace::rng {

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based splittable random stream. The i-th output is
/// mix64(key + i*golden), so a stream is a pure function of (key, counter)
/// and disjoint substreams are derived by hashing the parent key with the
/// child index. Every Monte Carlo operation takes an explicit Stream;
/// parallel batches use split() substreams and results are reduced in fixed
/// pairwise order, which makes runs bit-reproducible under parallelism.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : key_(mix64(seed + kGolden)) {}

  /// Disjoint substream for child index `i`.
  Stream split(std::uint64_t i) const {
    Stream s(0);
    s.key_ = mix64(key_ ^ (mix64(i + 1) + kGolden));
    s.counter_ = 0;
    s.cached_valid_ = false;
    return s;
  }

  std::uint64_t next_u64() { return mix64(key_ + (++counter_) * kGolden); }

  /// Uniform on (0,1), never returns exactly 0 or 1.
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; fixed consumption of two uniforms per pair.
  double normal() {
    if (cached_valid_) {
      cached_valid_ = false;
      return cached_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * kPi * u2;
    cached_ = r * std::sin(a);
    cached_valid_ = true;
    return r * std::cos(a);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double cached_ = 0.0;
  bool cached_valid_ = false;
};

}  // namespace spectrace::rng
