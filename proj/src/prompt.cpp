#include "promptevo/prompt.hpp"

#include <cmath>

#include "format.hpp"
#include "promptevo/errors.hpp"
#include "promptevo/population.hpp"

namespace promptevo {

std::string adapter_tag(const AttributeDef& attr, double value) {
  std::string name = attr.lora_name;
  double weight = value;
  if (attr.dual_adapter) {
    name += '_';
    name += value < 0.0 ? attr.pole_labels.low : attr.pole_labels.high;
    weight = std::fabs(value);
  }
  return "<lora:" + name + ":" + detail::fixed(weight, 2) + ">";
}

PromptString render_prompt(const AttributeSchema& schema, const Chromosome& c, std::string negative_text) {
  require_valid(schema, c);
  std::string text = schema.style_keyword;
  for (const auto& attr : schema.attributes) {
    if (attr.kind == AttributeKind::single_discrete) {
      text += ", " + attr.name + ":" + c.single_genes.at(attr.name);
    } else if (attr.kind == AttributeKind::multi_discrete) {
      std::vector<std::string> values = c.multi_genes.at(attr.name);
      to_domain_order(attr, values);
      for (const auto& v : values) text += ", " + attr.name + ":" + v;
    }
  }
  for (const auto& attr : schema.attributes)
    if (attr.kind == AttributeKind::continuous)
      text += ", " + adapter_tag(attr, c.continuous_genes.at(attr.name));
  return {std::move(text), std::move(negative_text)};
}

std::vector<Chromosome> init_population(const AttributeSchema& schema, const PreferenceModel& model,
                                        std::size_t n, Rng& rng) {
  if (n < 2) throw Error(ErrorCode::invalid_argument, "population size must be at least 2");
  std::vector<Chromosome> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(random_chromosome(schema, model, rng));
  return out;
}

std::pair<Chromosome, PromptString> sample_prompt(const AttributeSchema& schema, const PreferenceModel& model,
                                                  Rng& rng, std::string negative_text) {
  Chromosome c = random_chromosome(schema, model, rng);
  PromptString p = render_prompt(schema, c, std::move(negative_text));
  return {std::move(c), std::move(p)};
}

std::vector<Chromosome> Population::chromosomes() const {
  std::vector<Chromosome> out;
  out.reserve(individuals.size());
  for (const auto& ind : individuals) out.push_back(ind.chromosome);
  return out;
}

Population make_population(const AttributeSchema& schema, std::size_t generation_number,
                           std::vector<Chromosome> chromosomes) {
  Population pop;
  pop.generation_number = generation_number;
  pop.individuals.reserve(chromosomes.size());
  for (std::size_t i = 0; i < chromosomes.size(); ++i) {
    Individual ind;
    ind.prompt = render_prompt(schema, chromosomes[i]);
    ind.chromosome = std::move(chromosomes[i]);
    ind.index = i;
    pop.individuals.push_back(std::move(ind));
  }
  return pop;
}

}  // namespace promptevo
