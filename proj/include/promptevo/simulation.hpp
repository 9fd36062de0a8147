#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "promptevo/codec.hpp"
#include "promptevo/config.hpp"
#include "promptevo/oracle.hpp"
#include "promptevo/schema.hpp"

namespace promptevo {

struct ConvergenceThresholds {
  double match_rate_single = 0.75;
  double multi_overlap = 2.0 / 3.0;
};

struct SimulationOptions {
  AttributeSchema schema = kandinsky_default();
  GAConfig config;
  PreferenceProfile profile;
  std::size_t generations = 5;
  std::size_t runs = 20;
  std::uint64_t master_seed = 1;
  /// Render every individual with the mock backend into {image_dir}/images.
  std::optional<std::filesystem::path> image_dir;
  std::size_t threads = 1;
  ConvergenceThresholds thresholds;
};

/// Metrics of one population, with the model after that generation's votes.
struct GenerationMetrics {
  std::size_t run = 0;
  std::size_t generation = 0;
  /// Share of individuals matching every single-discrete target.
  double match_rate_single = 0.0;
  /// Mean of |gene ∩ target| / select_count over individuals and targeted
  /// multi attributes.
  double multi_overlap = 0.0;
  std::map<std::string, double> multi_overlap_by_attribute;
  std::map<std::string, double> cont_mean;
  std::map<std::string, double> cont_var;
  double mean_distance = 0.0;
  std::int64_t total_votes = 0;
  /// Shannon entropy (nats) of the normalized weight table, per discrete attribute.
  std::map<std::string, double> weight_entropy;
};

struct SimulationSummary {
  std::size_t final_generation = 0;
  double median_match_rate_single = 0.0;
  double median_multi_overlap = 0.0;
  std::map<std::string, double> median_multi_overlap_by_attribute;
  std::map<std::string, double> median_cont_mean;
  bool passed = false;
};

struct SimulationReport {
  std::vector<GenerationMetrics> rows;  // ordered by (run, generation)
  SimulationSummary summary;
  double seconds = 0.0;
};

/// R independent oracle-voted runs of G generations each. Deterministic given
/// the options regardless of `threads`.
SimulationReport run_simulation(const SimulationOptions& options);

double median(std::vector<double> values);

std::string report_csv(const SimulationReport& report, const AttributeSchema& schema);
/// Summary document; excludes wall-clock time so it stays deterministic.
Json summary_to_json(const SimulationReport& report, const SimulationOptions& options);

}  // namespace promptevo
