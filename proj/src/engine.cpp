#include "promptevo/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "promptevo/errors.hpp"
#include "promptevo/prompt.hpp"

namespace promptevo {

std::int64_t VoteTally::total() const {
  return std::accumulate(votes.begin(), votes.end(), std::int64_t{0});
}

void require_aligned(const VoteTally& tally, std::size_t n) {
  if (tally.votes.size() != n)
    throw Error(ErrorCode::misaligned_tally, "tally has " + std::to_string(tally.votes.size()) +
                                                 " entries for a population of " + std::to_string(n));
  for (std::size_t i = 0; i < n; ++i)
    if (tally.votes[i] < 0)
      throw Error(ErrorCode::misaligned_tally, "negative vote count at index " + std::to_string(i));
}

std::vector<double> fitness(const VoteTally& tally) {
  std::vector<double> f;
  f.reserve(tally.votes.size());
  for (auto v : tally.votes) f.push_back(static_cast<double>(v));
  return f;
}

std::vector<double> selection_probabilities(std::span<const double> fitness) {
  if (fitness.empty()) throw Error(ErrorCode::invalid_argument, "empty fitness vector");
  double total = 0.0;
  for (double f : fitness) {
    if (!(f >= 0.0) || !std::isfinite(f)) throw Error(ErrorCode::invalid_argument, "negative fitness");
    total += f;
  }
  std::vector<double> p(fitness.size());
  if (total == 0.0) {
    std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(p.size()));
  } else {
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = fitness[i] / total;
  }
  return p;
}

std::size_t roulette_draw(std::span<const double> probabilities, Rng& rng) {
  const double u = rng.uniform();
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    if (probabilities[i] <= 0.0) continue;
    cumulative += probabilities[i];
    last_positive = i;
    if (u < cumulative) return i;
  }
  // Rounding can leave the cumulative sum a hair below 1.
  return last_positive;
}

std::pair<std::size_t, std::size_t> select_parents(std::span<const double> probabilities, Rng& rng) {
  const std::size_t a = roulette_draw(probabilities, rng);
  const std::size_t b = roulette_draw(probabilities, rng);
  return {a, b};
}

Chromosome crossover(const AttributeSchema& schema, const GAConfig& config, const Chromosome& a,
                     const Chromosome& b, Rng& rng) {
  if (a.style != b.style || a.style != schema.style_keyword)
    throw Error(ErrorCode::schema_mismatch, "parents do not share the schema's style");
  require_valid(schema, a);
  require_valid(schema, b);

  const double p = config.crossover_gene_probability;
  Chromosome child;
  child.style = a.style;
  for (const auto& attr : schema.attributes) {
    switch (attr.kind) {
      case AttributeKind::single_discrete:
        child.single_genes[attr.name] =
            rng.bernoulli(p) ? a.single_genes.at(attr.name) : b.single_genes.at(attr.name);
        break;
      case AttributeKind::multi_discrete: {
        std::vector<std::string> pool = a.multi_genes.at(attr.name);
        for (const auto& v : b.multi_genes.at(attr.name))
          if (std::find(pool.begin(), pool.end(), v) == pool.end()) pool.push_back(v);
        to_domain_order(attr, pool);
        std::vector<std::string> chosen;
        while (chosen.size() < attr.select_count) {
          const auto k = static_cast<std::ptrdiff_t>(rng.below(pool.size()));
          chosen.push_back(pool[static_cast<std::size_t>(k)]);
          pool.erase(pool.begin() + k);
        }
        to_domain_order(attr, chosen);
        child.multi_genes[attr.name] = std::move(chosen);
        break;
      }
      case AttributeKind::continuous: {
        const double mid = 0.5 * (a.continuous_genes.at(attr.name) + b.continuous_genes.at(attr.name));
        child.continuous_genes[attr.name] = attr.range.clamp(mid);
        break;
      }
    }
  }
  child.seed = rng.bernoulli(p) ? a.seed : b.seed;
  return child;
}

Chromosome mutate(const AttributeSchema& schema, const GAConfig& config, const PreferenceModel& model,
                  const Chromosome& c, Rng& rng) {
  require_valid(schema, c);
  require_consistent(schema, model);
  const double pm = config.mutation_rate;

  Chromosome out = c;
  for (const auto& attr : schema.attributes) {
    switch (attr.kind) {
      case AttributeKind::continuous:
        if (rng.bernoulli(pm)) {
          const double x = rng.normal(model.mean(attr.name), std::sqrt(model.variance(attr.name)));
          out.continuous_genes[attr.name] = attr.range.clamp(x);
        }
        break;
      case AttributeKind::single_discrete:
        if (rng.bernoulli(pm)) {
          const std::string& current = out.single_genes[attr.name];
          std::vector<std::string> others;
          std::vector<double> w;
          for (const auto& v : attr.values) {
            if (v == current) continue;
            others.push_back(v);
            w.push_back(model.weight(attr.name, v));
          }
          out.single_genes[attr.name] = others[weighted_index(w, rng)];
        }
        break;
      case AttributeKind::multi_discrete: {
        auto& gene = out.multi_genes[attr.name];
        for (std::size_t slot = 0; slot < gene.size(); ++slot) {
          if (!rng.bernoulli(pm)) continue;
          std::vector<std::string> absent;
          std::vector<double> w;
          for (const auto& v : attr.values) {
            if (std::find(gene.begin(), gene.end(), v) != gene.end()) continue;
            absent.push_back(v);
            w.push_back(model.weight(attr.name, v));
          }
          gene[slot] = absent[weighted_index(w, rng)];
        }
        to_domain_order(attr, gene);
        break;
      }
    }
  }
  if (rng.bernoulli(pm))
    out.seed = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(config.seed_range_upper)));
  return out;
}

PreferenceModel update_weights(const PreferenceModel& model, std::span<const Chromosome> population,
                               const VoteTally& tally) {
  require_aligned(tally, population.size());
  PreferenceModel out = model;
  for (std::size_t i = 0; i < population.size(); ++i) {
    const auto votes = static_cast<double>(tally.votes[i]);
    if (votes == 0.0) continue;
    const Chromosome& c = population[i];
    auto bump = [&](const std::string& attr, const std::string& value) {
      auto table = out.weights.find(attr);
      if (table == out.weights.end() || !table->second.contains(value))
        throw Error(ErrorCode::inconsistent_model, "no weight for '" + attr + ":" + value + "'");
      table->second[value] += votes;
    };
    for (const auto& [attr, value] : c.single_genes) bump(attr, value);
    for (const auto& [attr, values] : c.multi_genes)
      for (const auto& v : std::set<std::string>(values.begin(), values.end())) bump(attr, v);
  }
  return out;
}

PreferenceModel update_continuous(const PreferenceModel& model, std::span<const Chromosome> population,
                                  const VoteTally& tally, const GAConfig&) {
  require_aligned(tally, population.size());
  PreferenceModel out = model;
  for (auto& [attr, stats] : out.continuous) {
    for (std::size_t i = 0; i < population.size(); ++i) {
      const auto votes = static_cast<double>(tally.votes[i]);
      if (votes == 0.0) continue;
      const auto gene = population[i].continuous_genes.find(attr);
      if (gene == population[i].continuous_genes.end())
        throw Error(ErrorCode::inconsistent_model, "individual lacks continuous gene '" + attr + "'");
      const double x = gene->second;
      stats.sum_v += votes;
      stats.sum_vx += votes * x;
      stats.sum_vxx += votes * x * x;
    }
  }
  return out;
}

PreferenceModel apply_votes(const AttributeSchema& schema, const GAConfig& config, const PreferenceModel& model,
                            std::span<const Chromosome> population, const VoteTally& tally) {
  require_consistent(schema, model);
  return update_continuous(update_weights(model, population, tally), population, tally, config);
}

EngineState initial_state(const AttributeSchema& schema, const GAConfig& config, Rng& rng) {
  if (auto v = validate_schema(schema); !v.empty())
    throw Error(ErrorCode::validation_error, "invalid schema: " + describe(v));
  if (auto v = validate_config(config); !v.empty())
    throw Error(ErrorCode::validation_error, "invalid config: " + describe(v));
  EngineState state;
  state.schema = schema;
  state.config = config;
  state.model = PreferenceModel::fresh(schema, config);
  state.population = make_population(schema, 0, init_population(schema, state.model, config.population_size, rng));
  return state;
}

std::vector<std::size_t> top_voted(const VoteTally& tally, std::size_t count) {
  std::vector<std::size_t> order(tally.votes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return tally.votes[a] > tally.votes[b]; });
  order.resize(std::min(count, order.size()));
  return order;
}

EngineState evolve(const EngineState& state, const VoteTally& tally, Rng& rng) {
  const auto parents = state.population.chromosomes();
  require_aligned(tally, parents.size());
  const AttributeSchema& schema = state.schema;
  const GAConfig& config = state.config;

  EngineState next;
  next.schema = schema;
  next.config = config;
  next.model = apply_votes(schema, config, state.model, parents, tally);

  const std::vector<double> probabilities = selection_probabilities(fitness(tally));

  std::vector<Chromosome> offspring;
  offspring.reserve(config.population_size);
  for (std::size_t k : top_voted(tally, config.elitism_count)) offspring.push_back(parents[k]);
  while (offspring.size() < config.population_size) {
    const auto [ia, ib] = select_parents(probabilities, rng);
    Chromosome child = crossover(schema, config, parents[ia], parents[ib], rng);
    offspring.push_back(mutate(schema, config, next.model, child, rng));
  }

  next.population = make_population(schema, state.population.generation_number + 1, std::move(offspring));
  next.history = state.history;
  next.history.push_back({state.population, tally});
  return next;
}

}  // namespace promptevo
