#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "promptevo/config.hpp"
#include "promptevo/schema.hpp"

namespace promptevo {

/// Vote-weighted sufficient statistics of one continuous attribute,
/// including the prior pseudo-observations.
struct ContinuousStats {
  double sum_v = 0.0;
  double sum_vx = 0.0;
  double sum_vxx = 0.0;

  double mean() const { return sum_vx / sum_v; }
  /// Weighted variance, never below `floor`.
  double variance(double floor) const;
  friend bool operator==(const ContinuousStats&, const ContinuousStats&) = default;
};

/// The evolving user preference: one weight per discrete value plus a normal
/// distribution per continuous attribute. Exported, it is the personalized
/// prompting model.
struct PreferenceModel {
  /// attribute name -> value token -> weight (>= 1).
  std::map<std::string, std::map<std::string, double>> weights;
  std::map<std::string, ContinuousStats> continuous;
  double variance_floor = 0.01;

  /// All weights 1; continuous statistics hold `prior_pseudo_count`
  /// pseudo-observations at mean `prior_mean` (clamped into the attribute's
  /// range) with variance `prior_variance`.
  static PreferenceModel fresh(const AttributeSchema& schema, const GAConfig& config = {});

  double weight(std::string_view attribute, std::string_view value) const;
  double mean(std::string_view attribute) const;
  double variance(std::string_view attribute) const;

  friend bool operator==(const PreferenceModel&, const PreferenceModel&) = default;
};

/// Empty iff the model covers exactly the schema's values and continuous
/// attributes with admissible statistics.
std::vector<Violation> check_model(const AttributeSchema& schema, const PreferenceModel& model);

/// Throws Error(inconsistent_model) when check_model reports anything.
void require_consistent(const AttributeSchema& schema, const PreferenceModel& model);

}  // namespace promptevo
