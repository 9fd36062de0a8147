#include <doctest.h>

#include <cmath>

#include "promptevo/engine.hpp"
#include "promptevo/errors.hpp"
#include "promptevo/simulation.hpp"
#include "support.hpp"

using namespace promptevo;
namespace fs = std::filesystem;

namespace {

SimulationOptions reference_setting() {
  SimulationOptions opt;
  opt.profile = load_profile(testing::read_text(testing::source_path("data/profiles/angular_primary.json")), opt.schema);
  opt.generations = 5;
  opt.runs = 20;
  opt.master_seed = 1;
  return opt;
}

}  // namespace

TEST_CASE("noiseless oracle converges within five generations") {
  const SimulationOptions opt = reference_setting();
  const SimulationReport report = run_simulation(opt);
  CHECK(report.summary.passed);
  CHECK(report.summary.median_match_rate_single >= 0.75);
  CHECK(report.summary.median_multi_overlap_by_attribute.at("hue") >= 2.0 / 3.0);
  int converged = 0;
  for (const auto& row : report.rows)
    if (row.generation == 5 && row.match_rate_single >= 0.75) ++converged;
  CHECK(converged >= 15);
  CHECK(report.rows.size() == 20 * 6);
}

TEST_CASE("learned brightness tracks the oracle target") {
  SimulationOptions opt;
  opt.profile.target_continuous["brightness"] = 0.8;
  opt.generations = 10;
  opt.runs = 20;
  opt.master_seed = 1;
  const SimulationReport report = run_simulation(opt);
  CHECK(std::abs(report.summary.median_cont_mean.at("brightness") - 0.8) <= 0.15);
}

TEST_CASE("reports are deterministic and independent of thread count") {
  SimulationOptions opt = reference_setting();
  opt.runs = 8;
  const std::string serial = report_csv(run_simulation(opt), opt.schema);
  opt.threads = 4;
  const SimulationReport parallel = run_simulation(opt);
  CHECK(report_csv(parallel, opt.schema) == serial);
  for (std::size_t i = 1; i < parallel.rows.size(); ++i) {
    const auto& a = parallel.rows[i - 1];
    const auto& b = parallel.rows[i];
    CHECK((a.run < b.run || (a.run == b.run && a.generation + 1 == b.generation)));
  }
  CHECK(summary_to_json(parallel, opt).dump() == summary_to_json(run_simulation(opt), opt).dump());
}

TEST_CASE("zero generations report only the initial population") {
  SimulationOptions opt = reference_setting();
  opt.generations = 0;
  opt.runs = 3;
  const SimulationReport report = run_simulation(opt);
  REQUIRE(report.rows.size() == 3);
  for (const auto& row : report.rows) CHECK(row.generation == 0);
  CHECK(report.summary.final_generation == 0);
}

TEST_CASE("csv layout") {
  SimulationOptions opt = reference_setting();
  opt.runs = 1;
  opt.generations = 1;
  const std::string csv = report_csv(run_simulation(opt), opt.schema);
  const std::string header = csv.substr(0, csv.find('\n'));
  CHECK(header ==
        "run,generation,match_rate_single,multi_overlap,cont_mean_brightness,cont_var_brightness,"
        "cont_mean_structure,cont_var_structure,cont_mean_parallel,cont_var_parallel,mean_distance,total_votes,"
        "weight_entropy_hue,weight_entropy_line,weight_entropy_elements");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}

TEST_CASE("metrics agree with an independent rebuild of one run") {
  SimulationOptions opt = reference_setting();
  opt.runs = 2;
  opt.generations = 4;
  const SimulationReport report = run_simulation(opt);

  const std::size_t run = 1;
  Rng engine_rng(derive_seed(opt.master_seed, 2 * run));
  Rng oracle_rng(derive_seed(opt.master_seed, 2 * run + 1));
  EngineState state = initial_state(opt.schema, opt.config, engine_rng);
  for (std::size_t g = 0; g <= opt.generations; ++g) {
    const auto pop = state.population.chromosomes();
    const VoteTally t = oracle_votes(opt.profile, opt.schema, pop, oracle_rng);
    const PreferenceModel model = apply_votes(opt.schema, opt.config, state.model, pop, t);
    const GenerationMetrics& row = report.rows[(opt.generations + 1) * run + g];
    REQUIRE(row.run == run);
    REQUIRE(row.generation == g);

    double match = 0, dist = 0, hue = 0, elements = 0;
    for (const auto& c : pop) {
      match += c.single_genes.at("line") == "angular";
      dist += distance(opt.profile, c, opt.schema);
      for (const auto& v : c.multi_genes.at("hue")) hue += (v == "red" || v == "yellow" || v == "blue") / 3.0;
      for (const auto& v : c.multi_genes.at("elements")) elements += (v == "point" || v == "triangle") / 2.0;
    }
    const double n = static_cast<double>(pop.size());
    CHECK(row.match_rate_single == doctest::Approx(match / n).epsilon(1e-12));
    CHECK(row.mean_distance == doctest::Approx(dist / n).epsilon(1e-12));
    CHECK(row.multi_overlap_by_attribute.at("hue") == doctest::Approx(hue / n).epsilon(1e-12));
    CHECK(row.multi_overlap_by_attribute.at("elements") == doctest::Approx(elements / n).epsilon(1e-12));
    CHECK(row.multi_overlap == doctest::Approx((hue + elements) / (2 * n)).epsilon(1e-12));
    CHECK(row.cont_mean.at("brightness") == model.mean("brightness"));
    CHECK(row.total_votes == 4);
    double w_total = 0, h = 0;
    for (const auto& [v, w] : model.weights.at("line")) w_total += w;
    for (const auto& [v, w] : model.weights.at("line")) h -= (w / w_total) * std::log(w / w_total);
    CHECK(row.weight_entropy.at("line") == doctest::Approx(h).epsilon(1e-12));
    state = evolve(state, t, engine_rng);
  }
}

TEST_CASE("image mode renders every individual with the mock backend") {
  testing::TempDir dir;
  SimulationOptions opt = reference_setting();
  opt.runs = 2;
  opt.generations = 1;
  opt.image_dir = dir.path();
  const SimulationReport with_images = run_simulation(opt);
  const auto count = std::distance(fs::directory_iterator(dir.path() / "images"), fs::directory_iterator{});
  CHECK(count > 0);
  CHECK(count <= 2 * 2 * 16);
  opt.image_dir.reset();
  CHECK(report_csv(run_simulation(opt), opt.schema) == report_csv(with_images, opt.schema));
}

TEST_CASE("invalid simulation inputs") {
  SimulationOptions opt = reference_setting();
  opt.profile.target_single["line"] = "wavy";
  CHECK_THROWS_AS(run_simulation(opt), Error);
  opt = reference_setting();
  opt.profile.vote_budget = 17;
  CHECK_THROWS_AS(run_simulation(opt), Error);
  opt = reference_setting();
  opt.runs = 0;
  CHECK_THROWS_AS(run_simulation(opt), Error);
}

TEST_CASE("median") {
  CHECK(median({}) == 0.0);
  CHECK(median({3.0}) == 3.0);
  CHECK(median({4.0, 1.0, 3.0}) == 3.0);
  CHECK(median({4.0, 1.0, 3.0, 2.0}) == 2.5);
}
