#include "promptevo/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "promptevo/errors.hpp"

namespace promptevo {

std::vector<Violation> validate_profile(const AttributeSchema& schema, const PreferenceProfile& p) {
  std::vector<Violation> out;
  for (const auto& [name, value] : p.target_single) {
    const AttributeDef* attr = schema.find(name);
    if (!attr || attr->kind != AttributeKind::single_discrete)
      out.push_back({name, "unknown_target", "no single_discrete attribute of this name"});
    else if (!attr->value_index(value))
      out.push_back({name, "value_not_in_domain", "'" + value + "' is not a domain value"});
  }
  for (const auto& [name, values] : p.target_multi) {
    const AttributeDef* attr = schema.find(name);
    if (!attr || attr->kind != AttributeKind::multi_discrete) {
      out.push_back({name, "unknown_target", "no multi_discrete attribute of this name"});
      continue;
    }
    std::set<std::string> distinct(values.begin(), values.end());
    if (distinct.size() != values.size() || values.size() != attr->select_count)
      out.push_back({name, "wrong_select_count", "target needs select_count distinct values"});
    for (const auto& v : values)
      if (!attr->value_index(v)) out.push_back({name, "value_not_in_domain", "'" + v + "' is not a domain value"});
  }
  for (const auto& [name, x] : p.target_continuous) {
    const AttributeDef* attr = schema.find(name);
    if (!attr || attr->kind != AttributeKind::continuous)
      out.push_back({name, "unknown_target", "no continuous attribute of this name"});
    else if (!std::isfinite(x) || !attr->range.contains(x))
      out.push_back({name, "out_of_range", "target outside the attribute range"});
  }
  if (p.vote_budget == 0) out.push_back({"", "vote_budget", "vote_budget must be positive"});
  if (!(p.noise >= 0.0 && p.noise <= 1.0)) out.push_back({"", "noise_range", "noise must lie in [0, 1]"});
  return out;
}

double distance(const PreferenceProfile& profile, const Chromosome& c, const AttributeSchema& schema) {
  double d = 0.0;
  for (const auto& [name, target] : profile.target_single)
    if (c.single_genes.at(name) != target) d += 1.0;
  for (const auto& [name, target] : profile.target_multi) {
    const auto& gene = c.multi_genes.at(name);
    std::size_t overlap = 0;
    for (const auto& v : gene)
      if (std::find(target.begin(), target.end(), v) != target.end()) ++overlap;
    const auto select = static_cast<double>(schema.find(name)->select_count);
    d += 1.0 - static_cast<double>(overlap) / select;
  }
  for (const auto& [name, target] : profile.target_continuous)
    d += std::fabs(c.continuous_genes.at(name) - target) / schema.find(name)->range.width();
  return d;
}

VoteTally oracle_votes(const PreferenceProfile& profile, const AttributeSchema& schema,
                       std::span<const Chromosome> population, Rng& rng) {
  const std::size_t n = population.size();
  if (profile.vote_budget > n)
    throw Error(ErrorCode::invalid_argument, "vote budget exceeds the population size");

  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = distance(profile, population[i], schema);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return d[a] < d[b]; });

  VoteTally tally;
  tally.votes.assign(n, 0);
  for (std::size_t k = 0; k < profile.vote_budget; ++k) {
    std::size_t target = order[k];
    if (rng.bernoulli(profile.noise)) target = static_cast<std::size_t>(rng.below(n));
    ++tally.votes[target];
  }
  return tally;
}

Json profile_to_json(const PreferenceProfile& p) {
  Json j;
  j["target_single"] = Json::object();
  for (const auto& [k, v] : p.target_single) j["target_single"][k] = v;
  j["target_multi"] = Json::object();
  for (const auto& [k, v] : p.target_multi) j["target_multi"][k] = v;
  j["target_continuous"] = Json::object();
  for (const auto& [k, v] : p.target_continuous) j["target_continuous"][k] = v;
  j["vote_budget"] = p.vote_budget;
  j["noise"] = p.noise;
  return j;
}

PreferenceProfile profile_from_json(const Json& j) {
  auto fail = [](const std::string& why) -> void { throw Error(ErrorCode::parse_error, "profile: " + why); };
  if (!j.is_object()) fail("expected an object");
  PreferenceProfile p;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "target_single") {
        p.target_single = value.get<std::map<std::string, std::string>>();
      } else if (key == "target_multi") {
        p.target_multi = value.get<std::map<std::string, std::vector<std::string>>>();
      } else if (key == "target_continuous") {
        p.target_continuous = value.get<std::map<std::string, double>>();
      } else if (key == "vote_budget") {
        if (!value.is_number_integer() || value.get<std::int64_t>() < 0) fail("vote_budget must be an integer");
        p.vote_budget = value.get<std::size_t>();
      } else if (key == "noise") {
        if (!value.is_number()) fail("noise must be a number");
        p.noise = value.get<double>();
      } else {
        fail("unknown key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    fail(std::string("wrong value type: ") + e.what());
  }
  for (auto& [name, values] : p.target_multi) std::sort(values.begin(), values.end());
  return p;
}

PreferenceProfile load_profile(std::string_view document, const AttributeSchema& schema) {
  PreferenceProfile p = profile_from_json(parse_json(document, "profile"));
  for (auto& [name, values] : p.target_multi)
    if (const AttributeDef* attr = schema.find(name)) to_domain_order(*attr, values);
  if (auto v = validate_profile(schema, p); !v.empty())
    throw Error(ErrorCode::validation_error, "invalid profile: " + describe(v));
  return p;
}

}  // namespace promptevo
