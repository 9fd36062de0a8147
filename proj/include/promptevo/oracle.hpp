#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "promptevo/chromosome.hpp"
#include "promptevo/codec.hpp"
#include "promptevo/engine.hpp"
#include "promptevo/rng.hpp"
#include "promptevo/schema.hpp"

namespace promptevo {

/// A simulated voter with a fixed aesthetic target. Targets may cover a
/// subset of the schema's attributes; untargeted attributes do not affect
/// distance.
struct PreferenceProfile {
  std::map<std::string, std::string> target_single;
  std::map<std::string, std::vector<std::string>> target_multi;
  std::map<std::string, double> target_continuous;
  std::size_t vote_budget = 4;
  /// Probability a vote is redirected to a uniformly random individual.
  double noise = 0.0;

  friend bool operator==(const PreferenceProfile&, const PreferenceProfile&) = default;
};

std::vector<Violation> validate_profile(const AttributeSchema& schema, const PreferenceProfile& profile);

/// Sum over targeted attributes of: mismatch (single), 1 - overlap/select_count
/// (multi), |x - target| / range width (continuous). The seed never counts.
double distance(const PreferenceProfile& profile, const Chromosome& c, const AttributeSchema& schema);

/// One vote to each of the vote_budget nearest individuals (ties by lower
/// index), each independently redirected to a uniform individual with
/// probability `noise`.
VoteTally oracle_votes(const PreferenceProfile& profile, const AttributeSchema& schema,
                       std::span<const Chromosome> population, Rng& rng);

Json profile_to_json(const PreferenceProfile& profile);
PreferenceProfile profile_from_json(const Json& j);
/// Parses and validates against `schema`; throws Error(parse_error|validation_error).
PreferenceProfile load_profile(std::string_view document, const AttributeSchema& schema);

}  // namespace promptevo
