#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "promptevo/chromosome.hpp"
#include "promptevo/config.hpp"
#include "promptevo/population.hpp"
#include "promptevo/preference_model.hpp"
#include "promptevo/rng.hpp"
#include "promptevo/schema.hpp"

namespace promptevo {

/// Votes per individual for one iteration; all entries non-negative.
struct VoteTally {
  std::vector<std::int64_t> votes;

  std::int64_t total() const;
  friend bool operator==(const VoteTally&, const VoteTally&) = default;
};

/// Throws Error(misaligned_tally) unless the tally has `n` non-negative entries.
void require_aligned(const VoteTally& tally, std::size_t n);

/// f(i) = V_i.
std::vector<double> fitness(const VoteTally& tally);

/// Roulette probabilities P_i = F_i / sum F. A zero total falls back to the
/// uniform distribution. Throws on negative or empty input.
std::vector<double> selection_probabilities(std::span<const double> fitness);

/// Index drawn from a probability vector (roulette wheel).
std::size_t roulette_draw(std::span<const double> probabilities, Rng& rng);

/// Two independent roulette draws; the same index may come up twice.
std::pair<std::size_t, std::size_t> select_parents(std::span<const double> probabilities, Rng& rng);

/// Heterogeneous crossover.
///   single-discrete and seed genes: uniform crossover, parent `a` with
///     probability crossover_gene_probability;
///   multi-discrete genes: select_count values drawn uniformly without
///     replacement from the union of both parents' values;
///   continuous genes: arithmetic mean of the parents.
Chromosome crossover(const AttributeSchema& schema, const GAConfig& config, const Chromosome& a,
                     const Chromosome& b, Rng& rng);

/// Uniform mutation, one independent event per gene (per slot for multi
/// genes) at mutation_rate. Discrete replacements are weight-proportional
/// among values other than the current ones; continuous genes are resampled
/// from the model's normal distribution and clamped.
Chromosome mutate(const AttributeSchema& schema, const GAConfig& config, const PreferenceModel& model,
                  const Chromosome& c, Rng& rng);

/// w'_v = w_v + sum of V_i over individuals whose chromosome contains v.
PreferenceModel update_weights(const PreferenceModel& model, std::span<const Chromosome> population,
                               const VoteTally& tally);

/// Accumulates vote-weighted sufficient statistics of each continuous gene.
PreferenceModel update_continuous(const PreferenceModel& model, std::span<const Chromosome> population,
                                  const VoteTally& tally, const GAConfig& config);

/// update_continuous(update_weights(model)).
PreferenceModel apply_votes(const AttributeSchema& schema, const GAConfig& config, const PreferenceModel& model,
                            std::span<const Chromosome> population, const VoteTally& tally);

struct GenerationSummary {
  Population population;
  VoteTally tally;
  friend bool operator==(const GenerationSummary&, const GenerationSummary&) = default;
};

struct EngineState {
  AttributeSchema schema;
  GAConfig config;
  PreferenceModel model;
  Population population;
  std::vector<GenerationSummary> history;
  friend bool operator==(const EngineState&, const EngineState&) = default;
};

/// Generation 0: fresh model and config.population_size random chromosomes.
EngineState initial_state(const AttributeSchema& schema, const GAConfig& config, Rng& rng);

/// Indices of the `count` top-voted individuals, ties broken by lower index.
std::vector<std::size_t> top_voted(const VoteTally& tally, std::size_t count);

/// One generation: update the model from the votes, then fill the next
/// population with elites followed by selected, recombined and mutated
/// offspring. Deterministic given the state, tally and rng.
EngineState evolve(const EngineState& state, const VoteTally& tally, Rng& rng);

}  // namespace promptevo
