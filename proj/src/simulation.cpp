#include "promptevo/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

#include "format.hpp"
#include "promptevo/backend.hpp"
#include "promptevo/engine.hpp"
#include "promptevo/errors.hpp"
#include "promptevo/generator.hpp"
#include "promptevo/image_store.hpp"

namespace promptevo {

namespace {

GenerationMetrics measure(const SimulationOptions& opt, const EngineState& state, const PreferenceModel& model,
                          const VoteTally& tally) {
  const AttributeSchema& schema = opt.schema;
  const PreferenceProfile& profile = opt.profile;
  const auto& inds = state.population.individuals;
  const double n = static_cast<double>(inds.size());

  GenerationMetrics m;
  m.generation = state.population.generation_number;
  std::size_t matches = 0;
  double distance_sum = 0.0;
  for (const auto& ind : inds) {
    bool all = true;
    for (const auto& [name, target] : profile.target_single) all = all && ind.chromosome.single_genes.at(name) == target;
    if (all) ++matches;
    distance_sum += distance(profile, ind.chromosome, schema);
  }
  m.match_rate_single = static_cast<double>(matches) / n;
  m.mean_distance = distance_sum / n;

  double overlap_total = 0.0;
  for (const auto& [name, target] : profile.target_multi) {
    const auto select = static_cast<double>(schema.find(name)->select_count);
    double sum = 0.0;
    for (const auto& ind : inds) {
      std::size_t hits = 0;
      for (const auto& v : ind.chromosome.multi_genes.at(name))
        if (std::find(target.begin(), target.end(), v) != target.end()) ++hits;
      sum += static_cast<double>(hits) / select;
    }
    m.multi_overlap_by_attribute[name] = sum / n;
    overlap_total += sum / n;
  }
  m.multi_overlap = profile.target_multi.empty() ? 0.0 : overlap_total / static_cast<double>(profile.target_multi.size());

  for (const auto& attr : schema.attributes) {
    if (attr.kind == AttributeKind::continuous) {
      m.cont_mean[attr.name] = model.mean(attr.name);
      m.cont_var[attr.name] = model.variance(attr.name);
    } else {
      const auto& table = model.weights.at(attr.name);
      double total = 0.0;
      for (const auto& [_, w] : table) total += w;
      double h = 0.0;
      for (const auto& [_, w] : table) {
        const double p = w / total;
        if (p > 0.0) h -= p * std::log(p);
      }
      m.weight_entropy[attr.name] = h;
    }
  }
  m.total_votes = tally.total();
  return m;
}

std::vector<GenerationMetrics> simulate_run(const SimulationOptions& opt, std::size_t run, ImageStore* store) {
  Rng engine_rng(derive_seed(opt.master_seed, 2 * run));
  Rng oracle_rng(derive_seed(opt.master_seed, 2 * run + 1));
  const MockBackend mock;
  EngineState state = initial_state(opt.schema, opt.config, engine_rng);

  std::vector<GenerationMetrics> rows;
  for (std::size_t g = 0;; ++g) {
    if (store) {
      std::vector<GenerationItem> items;
      for (const auto& ind : state.population.individuals) items.push_back({ind.prompt, ind.chromosome.seed});
      generate_population(mock, *store, items, GenerationParams{}, 1);
    }
    const auto chromosomes = state.population.chromosomes();
    const VoteTally tally = oracle_votes(opt.profile, opt.schema, chromosomes, oracle_rng);
    const PreferenceModel voted = apply_votes(opt.schema, opt.config, state.model, chromosomes, tally);
    GenerationMetrics m = measure(opt, state, voted, tally);
    m.run = run;
    rows.push_back(std::move(m));
    if (g == opt.generations) break;
    state = evolve(state, tally, engine_rng);
  }
  return rows;
}

}  // namespace

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

SimulationReport run_simulation(const SimulationOptions& opt) {
  if (auto v = validate_schema(opt.schema); !v.empty())
    throw Error(ErrorCode::validation_error, "invalid schema: " + describe(v));
  if (auto v = validate_profile(opt.schema, opt.profile); !v.empty())
    throw Error(ErrorCode::validation_error, "invalid profile: " + describe(v));
  if (opt.profile.vote_budget > opt.config.population_size)
    throw Error(ErrorCode::validation_error, "invalid profile: vote_budget exceeds the population size");
  if (opt.runs == 0) throw Error(ErrorCode::invalid_argument, "runs must be positive");

  const auto start = std::chrono::steady_clock::now();
  std::optional<ImageStore> store;
  if (opt.image_dir) store.emplace(*opt.image_dir);

  std::vector<std::vector<GenerationMetrics>> per_run(opt.runs);
  std::vector<std::exception_ptr> errors(opt.runs);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t r = next++; r < opt.runs; r = next++) {
      try {
        per_run[r] = simulate_run(opt, r, store ? &*store : nullptr);
      } catch (...) {
        errors[r] = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    const std::size_t threads = std::max<std::size_t>(1, std::min(opt.threads, opt.runs));
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  SimulationReport report;
  for (auto& rows : per_run)
    for (auto& row : rows) report.rows.push_back(std::move(row));

  SimulationSummary& s = report.summary;
  s.final_generation = opt.generations;
  std::vector<double> match;
  std::vector<double> overlap;
  std::map<std::string, std::vector<double>> overlap_by;
  std::map<std::string, std::vector<double>> cont_by;
  for (const auto& row : report.rows) {
    if (row.generation != opt.generations) continue;
    match.push_back(row.match_rate_single);
    overlap.push_back(row.multi_overlap);
    for (const auto& [k, v] : row.multi_overlap_by_attribute) overlap_by[k].push_back(v);
    for (const auto& [k, v] : row.cont_mean) cont_by[k].push_back(v);
  }
  s.median_match_rate_single = median(match);
  s.median_multi_overlap = median(overlap);
  for (auto& [k, v] : overlap_by) s.median_multi_overlap_by_attribute[k] = median(v);
  for (auto& [k, v] : cont_by) s.median_cont_mean[k] = median(v);

  s.passed = true;
  if (!opt.profile.target_single.empty())
    s.passed = s.passed && s.median_match_rate_single >= opt.thresholds.match_rate_single;
  for (const auto& [k, v] : s.median_multi_overlap_by_attribute)
    s.passed = s.passed && v >= opt.thresholds.multi_overlap;

  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

std::string report_csv(const SimulationReport& report, const AttributeSchema& schema) {
  std::vector<std::string> continuous;
  std::vector<std::string> discrete;
  for (const auto& a : schema.attributes) (a.is_discrete() ? discrete : continuous).push_back(a.name);

  std::string out = "run,generation,match_rate_single,multi_overlap";
  for (const auto& c : continuous) out += ",cont_mean_" + c + ",cont_var_" + c;
  out += ",mean_distance,total_votes";
  for (const auto& d : discrete) out += ",weight_entropy_" + d;
  out += "\n";

  for (const auto& r : report.rows) {
    out += std::to_string(r.run) + "," + std::to_string(r.generation) + "," + detail::fixed(r.match_rate_single, 6) +
           "," + detail::fixed(r.multi_overlap, 6);
    for (const auto& c : continuous)
      out += "," + detail::fixed(r.cont_mean.at(c), 6) + "," + detail::fixed(r.cont_var.at(c), 6);
    out += "," + detail::fixed(r.mean_distance, 6) + "," + std::to_string(r.total_votes);
    for (const auto& d : discrete) out += "," + detail::fixed(r.weight_entropy.at(d), 6);
    out += "\n";
  }
  return out;
}

Json summary_to_json(const SimulationReport& report, const SimulationOptions& opt) {
  const SimulationSummary& s = report.summary;
  Json j;
  j["runs"] = opt.runs;
  j["generations"] = opt.generations;
  j["master_seed"] = opt.master_seed;
  j["population_size"] = opt.config.population_size;
  j["profile"] = profile_to_json(opt.profile);
  j["thresholds"] = Json{{"match_rate_single", opt.thresholds.match_rate_single},
                         {"multi_overlap", opt.thresholds.multi_overlap}};
  Json medians;
  medians["match_rate_single"] = s.median_match_rate_single;
  medians["multi_overlap"] = s.median_multi_overlap;
  medians["multi_overlap_by_attribute"] = Json::object();
  for (const auto& [k, v] : s.median_multi_overlap_by_attribute) medians["multi_overlap_by_attribute"][k] = v;
  medians["cont_mean"] = Json::object();
  for (const auto& [k, v] : s.median_cont_mean) medians["cont_mean"][k] = v;
  j["final_generation"] = s.final_generation;
  j["medians"] = std::move(medians);
  j["passed"] = s.passed;
  return j;
}

}  // namespace promptevo
