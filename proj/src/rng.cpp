#include "promptevo/rng.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "promptevo/errors.hpp"

namespace promptevo {

std::uint64_t Rng::below(std::uint64_t bound) {
  if (bound == 0) throw Error(ErrorCode::invalid_argument, "Rng::below: bound must be positive");
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t r = engine_();
    if (r >= threshold) return r % bound;
  }
}

double Rng::normal(double mean, double stddev) {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  return mean + stddev * z;
}

std::string Rng::checkpoint() const {
  std::ostringstream out;
  out << engine_;
  return out.str();
}

Rng Rng::restore(std::string_view checkpoint) {
  Rng rng;
  std::istringstream in{std::string(checkpoint)};
  in >> rng.engine_;
  if (in.fail()) throw Error(ErrorCode::parse_error, "malformed random-stream checkpoint");
  return rng;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return splitmix64(splitmix64(master) + stream);
}

}  // namespace promptevo
