#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "promptevo/preference_model.hpp"
#include "promptevo/rng.hpp"
#include "promptevo/schema.hpp"

namespace promptevo {

/// One prompt genotype: style keyword, continuous genes, single-discrete
/// genes, multi-discrete genes and the generation seed.
///
/// Operations in this library always emit multi genes in domain order, so
/// structural equality coincides with set equality for their outputs.
struct Chromosome {
  std::string style;
  std::map<std::string, double> continuous_genes;
  std::map<std::string, std::string> single_genes;
  std::map<std::string, std::vector<std::string>> multi_genes;
  std::int64_t seed = 0;

  friend bool operator==(const Chromosome&, const Chromosome&) = default;
};

std::vector<Violation> validate_chromosome(const AttributeSchema& schema, const Chromosome& c);

/// Throws Error(invalid_chromosome) when validate_chromosome reports anything.
void require_valid(const AttributeSchema& schema, const Chromosome& c);

/// Draws a chromosome from the preference model: discrete values with
/// probability proportional to their weights (multi genes sequentially
/// without replacement), continuous genes from the model's normal
/// distribution clamped to range, seed uniform in [0, seed_upper).
Chromosome random_chromosome(const AttributeSchema& schema, const PreferenceModel& model, Rng& rng,
                             std::int64_t seed_upper = kSeedUpperBound);

/// Reorders `values` to follow the attribute's domain order.
void to_domain_order(const AttributeDef& attr, std::vector<std::string>& values);

/// `style|attr=...|...|seed=N`, attributes in schema order, multi values in
/// domain order, reals with 4 fixed decimals.
std::string canonical_string(const AttributeSchema& schema, const Chromosome& c);

/// Inverse of canonical_string (continuous genes at 4-decimal precision).
/// Throws Error(parse_error) or Error(invalid_chromosome).
Chromosome parse_canonical_string(const AttributeSchema& schema, std::string_view text);

/// Index of `weights`, drawn proportionally. All weights must be >= 0 with a
/// positive sum.
std::size_t weighted_index(const std::vector<double>& weights, Rng& rng);

}  // namespace promptevo
