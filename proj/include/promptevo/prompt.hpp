#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "promptevo/chromosome.hpp"

namespace promptevo {

struct PromptString {
  std::string text;
  std::string negative_text;
  friend bool operator==(const PromptString&, const PromptString&) = default;
};

/// "style, attr:value, ..., <lora:NAME:W>, ..." with discrete genes first in
/// schema order, then one adapter tag per continuous attribute (weights with
/// two decimals). Dual-adapter axes pick the adapter by the gene's sign.
PromptString render_prompt(const AttributeSchema& schema, const Chromosome& c,
                           std::string negative_text = {});

/// `<lora:NAME:W>` tag for one continuous gene value.
std::string adapter_tag(const AttributeDef& attr, double value);

std::vector<Chromosome> init_population(const AttributeSchema& schema, const PreferenceModel& model,
                                        std::size_t n, Rng& rng);

/// Prompting-free generation from an (optimized) preference model.
std::pair<Chromosome, PromptString> sample_prompt(const AttributeSchema& schema,
                                                  const PreferenceModel& model, Rng& rng,
                                                  std::string negative_text = {});

}  // namespace promptevo
