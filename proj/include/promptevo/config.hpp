#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "promptevo/schema.hpp"

namespace promptevo {

/// Exclusive upper bound of the seed gene: seeds live in [0, 2147483647).
inline constexpr std::int64_t kSeedUpperBound = 2147483647;

struct GAConfig {
  std::size_t population_size = 16;
  double crossover_gene_probability = 0.5;
  double mutation_rate = 0.05;
  std::int64_t seed_range_upper = kSeedUpperBound;
  /// Top-voted individuals copied unchanged into the next generation.
  std::size_t elitism_count = 0;
  double variance_floor = 0.01;
  double prior_pseudo_count = 4.0;
  double prior_mean = 0.0;
  double prior_variance = 0.25;

  friend bool operator==(const GAConfig&, const GAConfig&) = default;
};

std::vector<Violation> validate_config(const GAConfig& config);

}  // namespace promptevo
