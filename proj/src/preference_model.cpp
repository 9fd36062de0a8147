#include "promptevo/preference_model.hpp"

#include <algorithm>
#include <cmath>

#include "promptevo/errors.hpp"

namespace promptevo {

std::vector<Violation> validate_config(const GAConfig& c) {
  std::vector<Violation> out;
  if (c.population_size < 2) out.push_back({"", "population_too_small", "population_size must be >= 2"});
  if (!(c.crossover_gene_probability > 0.0 && c.crossover_gene_probability < 1.0))
    out.push_back({"", "crossover_probability_range", "crossover_gene_probability must lie in (0, 1)"});
  if (!(c.mutation_rate >= 0.0 && c.mutation_rate < 1.0))
    out.push_back({"", "mutation_rate_range", "mutation_rate must lie in [0, 1)"});
  if (c.seed_range_upper < 1 || c.seed_range_upper > kSeedUpperBound)
    out.push_back({"", "seed_range_upper", "seed_range_upper must lie in [1, 2147483647]"});
  if (c.elitism_count >= c.population_size)
    out.push_back({"", "elitism_too_large", "elitism_count must be smaller than population_size"});
  if (!(c.variance_floor > 0.0)) out.push_back({"", "variance_floor", "variance_floor must be positive"});
  if (!(c.prior_pseudo_count > 0.0))
    out.push_back({"", "prior_pseudo_count", "prior_pseudo_count must be positive"});
  if (!std::isfinite(c.prior_mean)) out.push_back({"", "prior_mean", "prior_mean must be finite"});
  if (!(c.prior_variance > 0.0)) out.push_back({"", "prior_variance", "prior_variance must be positive"});
  return out;
}

double ContinuousStats::variance(double floor) const {
  const double m = mean();
  return std::max(sum_vxx / sum_v - m * m, floor);
}

PreferenceModel PreferenceModel::fresh(const AttributeSchema& schema, const GAConfig& config) {
  PreferenceModel model;
  model.variance_floor = config.variance_floor;
  for (const auto& attr : schema.attributes) {
    if (attr.is_discrete()) {
      auto& table = model.weights[attr.name];
      for (const auto& v : attr.values) table[v] = 1.0;
    } else {
      const double n = config.prior_pseudo_count;
      const double m = attr.range.clamp(config.prior_mean);
      model.continuous[attr.name] = {n, n * m, n * (config.prior_variance + m * m)};
    }
  }
  return model;
}

double PreferenceModel::weight(std::string_view attribute, std::string_view value) const {
  const auto table = weights.find(std::string(attribute));
  if (table == weights.end())
    throw Error(ErrorCode::inconsistent_model, "no weight table for '" + std::string(attribute) + "'");
  const auto it = table->second.find(std::string(value));
  if (it == table->second.end())
    throw Error(ErrorCode::inconsistent_model,
                "no weight for '" + std::string(attribute) + ":" + std::string(value) + "'");
  return it->second;
}

double PreferenceModel::mean(std::string_view attribute) const {
  const auto it = continuous.find(std::string(attribute));
  if (it == continuous.end())
    throw Error(ErrorCode::inconsistent_model, "no distribution for '" + std::string(attribute) + "'");
  return it->second.mean();
}

double PreferenceModel::variance(std::string_view attribute) const {
  const auto it = continuous.find(std::string(attribute));
  if (it == continuous.end())
    throw Error(ErrorCode::inconsistent_model, "no distribution for '" + std::string(attribute) + "'");
  return it->second.variance(variance_floor);
}

std::vector<Violation> check_model(const AttributeSchema& schema, const PreferenceModel& model) {
  std::vector<Violation> out;
  if (!(model.variance_floor > 0.0)) out.push_back({"", "variance_floor", "variance floor must be positive"});
  std::size_t discrete = 0;
  std::size_t continuous = 0;
  for (const auto& attr : schema.attributes) {
    if (attr.is_discrete()) {
      ++discrete;
      const auto table = model.weights.find(attr.name);
      if (table == model.weights.end()) {
        out.push_back({attr.name, "missing_weights", "no weight table"});
        continue;
      }
      for (const auto& v : attr.values) {
        const auto it = table->second.find(v);
        if (it == table->second.end()) {
          out.push_back({attr.name, "missing_weight", "no weight for value '" + v + "'"});
        } else if (!(it->second >= 1.0) || !std::isfinite(it->second)) {
          out.push_back({attr.name, "weight_below_one", "weight of '" + v + "' is below 1"});
        }
      }
      if (table->second.size() != attr.values.size())
        out.push_back({attr.name, "unknown_value", "weight table has values outside the domain"});
    } else {
      ++continuous;
      const auto it = model.continuous.find(attr.name);
      if (it == model.continuous.end()) {
        out.push_back({attr.name, "missing_distribution", "no continuous statistics"});
        continue;
      }
      const auto& s = it->second;
      if (!(s.sum_v > 0.0) || !std::isfinite(s.sum_vx) || !std::isfinite(s.sum_vxx))
        out.push_back({attr.name, "degenerate_statistics", "sum_v must be positive and sums finite"});
    }
  }
  if (model.weights.size() != discrete)
    out.push_back({"", "unknown_attribute", "weight tables for attributes outside the schema"});
  if (model.continuous.size() != continuous)
    out.push_back({"", "unknown_attribute", "statistics for attributes outside the schema"});
  return out;
}

void require_consistent(const AttributeSchema& schema, const PreferenceModel& model) {
  if (auto v = check_model(schema, model); !v.empty())
    throw Error(ErrorCode::inconsistent_model, "preference model does not match schema: " + describe(v));
}

}  // namespace promptevo
