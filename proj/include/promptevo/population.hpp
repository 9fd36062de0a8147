#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "promptevo/chromosome.hpp"
#include "promptevo/generation_types.hpp"
#include "promptevo/prompt.hpp"

namespace promptevo {

struct Individual {
  Chromosome chromosome;
  PromptString prompt;  // render_prompt(schema, chromosome)
  std::optional<ImageRef> image;
  std::size_t index = 0;
  friend bool operator==(const Individual&, const Individual&) = default;
};

struct Population {
  std::size_t generation_number = 0;
  std::vector<Individual> individuals;

  std::size_t size() const { return individuals.size(); }
  std::vector<Chromosome> chromosomes() const;
  friend bool operator==(const Population&, const Population&) = default;
};

/// Builds a population with rendered prompts and indices 0..n-1.
Population make_population(const AttributeSchema& schema, std::size_t generation_number,
                           std::vector<Chromosome> chromosomes);

}  // namespace promptevo
