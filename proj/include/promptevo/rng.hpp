#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace promptevo {

/// Deterministic random stream.
///
/// Every draw is computed from raw 64-bit engine output, so sequences do not
/// depend on the standard library's distribution implementations and the
/// engine state alone is a complete checkpoint. Streams are never shared
/// between threads; each operation receives the stream it may consume.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1), 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound). `bound` must be positive.
  std::uint64_t below(std::uint64_t bound);

  bool bernoulli(double p) { return uniform() < p; }

  /// Box-Muller; consumes exactly two uniforms per call.
  double normal(double mean, double stddev);

  std::string checkpoint() const;
  static Rng restore(std::string_view checkpoint);

  friend bool operator==(const Rng& a, const Rng& b) { return a.engine_ == b.engine_; }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Independent seed for sub-stream `stream` of a master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

}  // namespace promptevo
