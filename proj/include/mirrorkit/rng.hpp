#pragma once

// Counter-based stream splitting over std::mt19937_64.
//
// A stream is identified by (seed, stream_index). Its engine is seeded with
//   child_seed = splitmix64(seed ^ splitmix64(stream_index))
// where splitmix64 is the finalizer published with SplittableRandom
// (Steele, Lea, Flood 2014). mt19937_64 is fully specified by the standard,
// and the uniform/normal transforms below are written out by hand, so a
// (seed, stream_index) pair yields the same bits on every conforming platform.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace mirrorkit {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream_index) {
  return splitmix64(seed ^ splitmix64(stream_index));
}

class RngStream {
public:
  RngStream(std::uint64_t seed, std::uint64_t stream_index)
      : seed_(seed), stream_index_(stream_index), engine_(mix_seed(seed, stream_index)) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_index() const { return stream_index_; }

  /// Independent sub-stream, e.g. one per Monte Carlo trial.
  RngStream child(std::uint64_t index) const {
    return RngStream(mix_seed(seed_, stream_index_), index);
  }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  /// Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  double rademacher() { return (engine_() >> 63) ? 1.0 : -1.0; }

private:
  std::uint64_t seed_;
  std::uint64_t stream_index_;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

} // namespace mirrorkit
