#include "promptevo/chromosome.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include "format.hpp"
#include "promptevo/errors.hpp"

namespace promptevo {

std::vector<Violation> validate_chromosome(const AttributeSchema& schema, const Chromosome& c) {
  std::vector<Violation> out;
  if (c.style != schema.style_keyword)
    out.push_back({"", "style_mismatch", "style gene '" + c.style + "' differs from the schema keyword"});

  for (const auto& attr : schema.attributes) {
    switch (attr.kind) {
      case AttributeKind::single_discrete: {
        const auto it = c.single_genes.find(attr.name);
        if (it == c.single_genes.end()) {
          out.push_back({attr.name, "missing_gene", "no single-discrete gene"});
        } else if (!attr.value_index(it->second)) {
          out.push_back({attr.name, "value_not_in_domain", "'" + it->second + "' is not a domain value"});
        }
        break;
      }
      case AttributeKind::multi_discrete: {
        const auto it = c.multi_genes.find(attr.name);
        if (it == c.multi_genes.end()) {
          out.push_back({attr.name, "missing_gene", "no multi-discrete gene"});
          break;
        }
        std::set<std::string_view> seen;
        bool duplicate = false;
        for (const auto& v : it->second) {
          if (!attr.value_index(v))
            out.push_back({attr.name, "value_not_in_domain", "'" + v + "' is not a domain value"});
          if (!seen.insert(v).second) duplicate = true;
        }
        if (duplicate) out.push_back({attr.name, "duplicate_value", "multi gene repeats a value"});
        if (it->second.size() != attr.select_count)
          out.push_back({attr.name, "wrong_select_count",
                         "expected " + std::to_string(attr.select_count) + " values, got " +
                             std::to_string(it->second.size())});
        break;
      }
      case AttributeKind::continuous: {
        const auto it = c.continuous_genes.find(attr.name);
        if (it == c.continuous_genes.end()) {
          out.push_back({attr.name, "missing_gene", "no continuous gene"});
        } else if (!std::isfinite(it->second) || !attr.range.contains(it->second)) {
          out.push_back({attr.name, "out_of_range", "continuous gene outside its range"});
        }
        break;
      }
    }
  }

  auto check_unexpected = [&](const auto& genes, AttributeKind kind) {
    for (const auto& [name, _] : genes) {
      const AttributeDef* attr = schema.find(name);
      if (!attr || attr->kind != kind)
        out.push_back({name, "unexpected_gene", "gene does not match a schema attribute of this kind"});
    }
  };
  check_unexpected(c.continuous_genes, AttributeKind::continuous);
  check_unexpected(c.single_genes, AttributeKind::single_discrete);
  check_unexpected(c.multi_genes, AttributeKind::multi_discrete);

  if (c.seed < 0 || c.seed >= kSeedUpperBound)
    out.push_back({"", "seed_out_of_range", "seed must lie in [0, 2147483647)"});
  return out;
}

void require_valid(const AttributeSchema& schema, const Chromosome& c) {
  if (auto v = validate_chromosome(schema, c); !v.empty())
    throw Error(ErrorCode::invalid_chromosome, "invalid chromosome: " + describe(v));
}

std::size_t weighted_index(const std::vector<double>& weights, Rng& rng) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw Error(ErrorCode::invalid_argument, "weighted draw needs a positive total");
  const double target = rng.uniform() * total;
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    cumulative += weights[i];
    last_positive = i;
    if (target < cumulative) return i;
  }
  return last_positive;
}

void to_domain_order(const AttributeDef& attr, std::vector<std::string>& values) {
  std::stable_sort(values.begin(), values.end(), [&](const std::string& a, const std::string& b) {
    return attr.value_index(a).value_or(attr.values.size()) < attr.value_index(b).value_or(attr.values.size());
  });
}

Chromosome random_chromosome(const AttributeSchema& schema, const PreferenceModel& model, Rng& rng,
                             std::int64_t seed_upper) {
  require_consistent(schema, model);
  Chromosome c;
  c.style = schema.style_keyword;
  for (const auto& attr : schema.attributes) {
    switch (attr.kind) {
      case AttributeKind::continuous: {
        const double x = rng.normal(model.mean(attr.name), std::sqrt(model.variance(attr.name)));
        c.continuous_genes[attr.name] = attr.range.clamp(x);
        break;
      }
      case AttributeKind::single_discrete: {
        std::vector<double> w;
        for (const auto& v : attr.values) w.push_back(model.weight(attr.name, v));
        c.single_genes[attr.name] = attr.values[weighted_index(w, rng)];
        break;
      }
      case AttributeKind::multi_discrete: {
        std::vector<std::string> remaining = attr.values;
        std::vector<std::string> chosen;
        while (chosen.size() < attr.select_count) {
          std::vector<double> w;
          for (const auto& v : remaining) w.push_back(model.weight(attr.name, v));
          const std::size_t k = weighted_index(w, rng);
          chosen.push_back(remaining[k]);
          remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(k));
        }
        to_domain_order(attr, chosen);
        c.multi_genes[attr.name] = std::move(chosen);
        break;
      }
    }
  }
  c.seed = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(seed_upper)));
  return c;
}

std::string canonical_string(const AttributeSchema& schema, const Chromosome& c) {
  require_valid(schema, c);
  std::string out = c.style;
  for (const auto& attr : schema.attributes) {
    out += '|';
    out += attr.name;
    out += '=';
    switch (attr.kind) {
      case AttributeKind::continuous:
        out += detail::fixed(c.continuous_genes.at(attr.name), 4);
        break;
      case AttributeKind::single_discrete:
        out += c.single_genes.at(attr.name);
        break;
      case AttributeKind::multi_discrete: {
        std::vector<std::string> values = c.multi_genes.at(attr.name);
        to_domain_order(attr, values);
        for (std::size_t i = 0; i < values.size(); ++i) {
          if (i) out += ',';
          out += values[i];
        }
        break;
      }
    }
  }
  out += "|seed=";
  out += std::to_string(c.seed);
  return out;
}

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = s.find(sep, start);
    parts.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

[[noreturn]] void bad_canonical(const std::string& why) {
  throw Error(ErrorCode::parse_error, "malformed canonical chromosome: " + why);
}

}  // namespace

Chromosome parse_canonical_string(const AttributeSchema& schema, std::string_view text) {
  while (!text.empty() && (text.back() == '\n' || text.back() == '\r' || text.back() == ' '))
    text.remove_suffix(1);
  const auto fields = split(text, '|');
  if (fields.size() != schema.attributes.size() + 2)
    bad_canonical("expected " + std::to_string(schema.attributes.size() + 2) + " fields");

  Chromosome c;
  c.style = std::string(fields.front());
  for (std::size_t i = 0; i < schema.attributes.size(); ++i) {
    const auto& attr = schema.attributes[i];
    const std::string_view field = fields[i + 1];
    const std::size_t eq = field.find('=');
    if (eq == std::string_view::npos || field.substr(0, eq) != attr.name)
      bad_canonical("expected field '" + attr.name + "='");
    const std::string_view value = field.substr(eq + 1);
    switch (attr.kind) {
      case AttributeKind::continuous: {
        double x = 0.0;
        auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), x);
        if (ec != std::errc{} || ptr != value.data() + value.size())
          bad_canonical("bad real for '" + attr.name + "'");
        // Undo rounding past a bound that is not a multiple of 1e-4.
        if (x > attr.range.hi && x - attr.range.hi <= 5e-5) x = attr.range.hi;
        if (x < attr.range.lo && attr.range.lo - x <= 5e-5) x = attr.range.lo;
        c.continuous_genes[attr.name] = x;
        break;
      }
      case AttributeKind::single_discrete:
        c.single_genes[attr.name] = std::string(value);
        break;
      case AttributeKind::multi_discrete: {
        std::vector<std::string> values;
        for (auto v : split(value, ',')) values.emplace_back(v);
        to_domain_order(attr, values);
        c.multi_genes[attr.name] = std::move(values);
        break;
      }
    }
  }
  const std::string_view seed_field = fields.back();
  if (seed_field.substr(0, 5) != "seed=") bad_canonical("expected trailing 'seed=' field");
  const std::string_view digits = seed_field.substr(5);
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), c.seed);
  if (ec != std::errc{} || ptr != digits.data() + digits.size() || digits.empty())
    bad_canonical("bad seed");
  require_valid(schema, c);
  return c;
}

}  // namespace promptevo
