// One PASS/FAIL line per primary acceptance criterion; exit status 1 if any fail.
#include <cmath>
#include <iostream>
#include <map>
#include <set>

#include "promptevo/digest.hpp"
#include "promptevo/engine.hpp"
#include "promptevo/generator.hpp"
#include "promptevo/oracle.hpp"
#include "promptevo/prompt.hpp"
#include "promptevo/service.hpp"
#include "promptevo/session.hpp"
#include "promptevo/simulation.hpp"
#include "support.hpp"

using namespace promptevo;
using namespace std::chrono_literals;
namespace fs = std::filesystem;

namespace {

/// Accumulates failure notes for one criterion.
struct Check {
  std::vector<std::string> failures;
  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
};

using Criterion = std::pair<std::string, std::function<void(Check&)>>;

std::string num(double x) {
  std::ostringstream s;
  s << x;
  return s.str();
}

Chromosome base() {
  Chromosome c;
  c.style = "kandinsky";
  c.multi_genes["hue"] = {"red", "yellow", "blue"};
  c.single_genes["line"] = "straight";
  c.multi_genes["elements"] = {"point", "triangle"};
  c.continuous_genes["brightness"] = 0.2;
  c.continuous_genes["structure"] = -0.3;
  c.continuous_genes["parallel"] = 0.1;
  c.seed = 1000;
  return c;
}

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

void convergence(Check& check) {
  const std::string profile_text = testing::read_text(testing::source_path("data/profiles/angular_primary.json"));
  SimulationOptions opt;
  opt.profile = load_profile(profile_text, opt.schema);
  check.expect(opt.profile.vote_budget == 4 && opt.profile.noise == 0.0, "shipped profile is not noiseless budget 4");
  const SimulationReport report = run_simulation(opt);
  const auto& s = report.summary;
  check.expect(s.median_match_rate_single >= 0.75, "median match " + num(s.median_match_rate_single));
  check.expect(s.median_multi_overlap_by_attribute.at("hue") >= 2.0 / 3.0,
               "median hue overlap " + num(s.median_multi_overlap_by_attribute.at("hue")));
  check.expect(s.passed, "summary not passed");
  check.expect(report.seconds < 60.0, "library runtime " + num(report.seconds) + " s");

  testing::TempDir dir;
  const auto start = std::chrono::steady_clock::now();
  const auto [code, out] = testing::run_command(testing::cli(
      "simulate --profile '" + testing::source_path("data/profiles/angular_primary.json").string() +
      "' --generations 5 --runs 20 --master-seed 1 --report '" + dir.path().string() + "'"));
  const double cli_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  check.expect(code == 0, "CLI exit code " + std::to_string(code));
  check.expect(cli_seconds < 60.0, "CLI runtime " + num(cli_seconds) + " s");
  check.expect(fs::exists(dir.path() / "metrics.csv") && fs::exists(dir.path() / "summary.json"), "report files missing");
}

void selection(Check& check) {
  std::vector<double> p(16, 0.0);
  p[0] = 0.5;
  p[1] = 0.25;
  p[2] = 0.25;
  Rng rng(20240);
  std::vector<long> counts(16, 0);
  for (int i = 0; i < 10000; ++i) ++counts[roulette_draw(p, rng)];
  std::vector<long> positive(counts.begin(), counts.begin() + 3);
  std::vector<double> q(p.begin(), p.begin() + 3);
  const double stat = testing::chi_square_statistic(positive, q);
  const double critical = testing::chi_square_critical(2);
  check.expect(std::abs(critical - 13.8155) < 1e-3, "critical value " + num(critical));
  check.expect(stat < critical, "chi-square " + num(stat));
  for (std::size_t i = 3; i < 16; ++i) check.expect(counts[i] == 0, "zero-probability index drawn");

  const auto fitness_p = selection_probabilities(std::vector<double>{2, 1, 1, 0});
  check.expect(fitness_p == std::vector<double>{0.5, 0.25, 0.25, 0.0}, "probabilities for votes [2,1,1,0]");
}

void exactness(Check& check) {
  const AttributeSchema s = kandinsky_default();
  const GAConfig config;
  const PreferenceModel m = PreferenceModel::fresh(s, config);
  std::vector<Chromosome> pop(2, base());
  pop[1].multi_genes["hue"] = {"yellow", "blue", "green"};
  const PreferenceModel w = update_weights(m, pop, {{2, 0}});
  check.expect(m.weight("hue", "red") == 1.0, "prior weight");
  check.expect(std::abs(w.weight("hue", "red") - 3.0) <= 1e-12, "w(red) " + num(w.weight("hue", "red")));

  std::vector<Chromosome> cont(2, base());
  cont[0].continuous_genes["brightness"] = 1.0;
  const PreferenceModel c = update_continuous(m, cont, {{4, 0}}, config);
  check.expect(std::abs(m.mean("brightness")) <= 1e-12, "prior mean");
  check.expect(std::abs(c.mean("brightness") - 0.5) <= 1e-12, "mean " + num(c.mean("brightness")));
}

void mutation_rate(Check& check) {
  const AttributeSchema s = kandinsky_default();
  const PreferenceModel m = PreferenceModel::fresh(s);
  const GAConfig config;
  Rng rng(31337);
  const int n = 100000;
  const Chromosome c0 = base();
  std::map<std::string, int> changed;
  for (int i = 0; i < n; ++i) {
    const Chromosome c = mutate(s, config, m, c0, rng);
    changed["line"] += c.single_genes.at("line") != c0.single_genes.at("line");
    changed["seed"] += c.seed != c0.seed;
    for (const auto& [name, x] : c0.continuous_genes) changed[name] += c.continuous_genes.at(name) != x;
  }
  for (const auto& [gene, k] : changed) {
    const double f = k / double(n);
    check.expect(std::abs(f - 0.05) <= 0.003, gene + " rate " + num(f));
  }
}

void crossover_inclusion(Check& check) {
  const AttributeSchema s = kandinsky_default();
  const GAConfig config;
  Chromosome a = base(), b = base();
  b.multi_genes["hue"] = {"orange", "green", "violet"};
  const double expected = binomial(5, 2) / binomial(6, 3);
  Rng rng(4242);
  std::map<std::string, int> counts;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const Chromosome child = crossover(s, config, a, b, rng);
    for (const auto& v : child.multi_genes.at("hue")) ++counts[v];
  }
  check.expect(counts.size() == 6, "values outside the parents");
  for (const auto& [v, k] : counts) check.expect(std::abs(k / double(n) - expected) <= 0.02, v + " " + num(k / double(n)));
}

void determinism(Check& check) {
  PreferenceProfile profile;
  profile.target_single["line"] = "angular";
  profile.target_multi["hue"] = {"red", "yellow", "blue"};
  const GenerationOptions options{4, RetryPolicy{0, 1ms}};
  const MockBackend mock;

  testing::TempDir first_dir, second_dir;
  ImageStore first_store(first_dir.path());
  SessionSettings settings;
  settings.master_seed = 99;
  LiveSession live = LiveSession::create(settings, mock, first_store, options);
  Rng voter(7);
  for (int g = 0; g < 5; ++g) {
    live.record_votes(oracle_votes(profile, settings.schema, live.population().chromosomes(), voter));
    live.evolve(mock, first_store, options);
  }
  const fs::path file = save_session(live.record(), first_dir.path());
  const SessionRecord loaded = load_session(file);
  check.expect(loaded == live.record(), "session file round trip");

  const ReplayResult replay = replay_session(loaded);
  check.expect(replay.state == live.state(), "replayed state differs");

  // Same seed and recorded tallies in a fresh store.
  ImageStore second_store(second_dir.path());
  LiveSession again = LiveSession::create(settings, mock, second_store, options);
  for (std::size_t g = 0; g + 1 < loaded.generations.size(); ++g) {
    again.record_votes(*loaded.generations[g].tally);
    again.evolve(mock, second_store, options);
  }
  std::size_t compared = 0;
  for (std::size_t g = 0; g < loaded.generations.size(); ++g) {
    const auto& want = loaded.generations[g];
    const auto& got = again.record().generations[g];
    check.expect(got.chromosomes == want.chromosomes, "canonical strings differ at generation " + std::to_string(g));
    check.expect(got.image_hashes == want.image_hashes, "image hashes differ at generation " + std::to_string(g));
    for (std::size_t i = 0; i < want.chromosomes.size(); ++i) {
      const Chromosome c = parse_canonical_string(loaded.schema, want.chromosomes[i]);
      const PromptString prompt = render_prompt(loaded.schema, c, loaded.params.negative_prompt);
      const std::string hash = sha256_hex(mock.render(prompt, c.seed, loaded.params));
      check.expect(hash == want.image_hashes[i], "re-rendered hash differs");
      const auto stored = second_store.read(hash);
      check.expect(stored && sha256_hex(*stored) == hash, "stored image content differs");
      ++compared;
    }
  }
  check.expect(compared == 16 * 6, "compared " + std::to_string(compared) + " individuals");
}

void invariants(Check& check) {
  Rng rng(1000003);
  int schemas = 0;
  for (; schemas < 1000; ++schemas) {
    const AttributeSchema s = testing::random_schema(rng);
    const GAConfig config = testing::random_config(rng);
    EngineState state = initial_state(s, config, rng);
    for (int g = 0; g < 2; ++g) {
      VoteTally t;
      for (std::size_t i = 0; i < state.population.size(); ++i)
        t.votes.push_back(static_cast<std::int64_t>(rng.below(3)));
      const auto p = selection_probabilities(fitness(t));
      double total = 0.0;
      for (double x : p) total += x;
      check.expect(std::abs(total - 1.0) <= 1e-12, "probabilities sum to " + num(total));
      const EngineState next = evolve(state, t, rng);
      for (const auto& [attr, table] : next.model.weights)
        for (const auto& [v, w] : table)
          check.expect(w >= state.model.weight(attr, v), "weight decreased for " + attr + ":" + v);
      for (const auto& ind : next.population.individuals) {
        check.expect(validate_chromosome(s, ind.chromosome).empty(), "invalid offspring");
        for (const auto& a : s.attributes) {
          if (a.kind == AttributeKind::multi_discrete) {
            const auto& gene = ind.chromosome.multi_genes.at(a.name);
            check.expect(std::set<std::string>(gene.begin(), gene.end()).size() == gene.size(), "duplicate values");
          } else if (a.kind == AttributeKind::continuous) {
            const double x = ind.chromosome.continuous_genes.at(a.name);
            check.expect(x >= a.range.lo && x <= a.range.hi, "continuous gene out of range");
          }
        }
      }
      // mutation alone with every gene forced to mutate
      GAConfig always = config;
      always.mutation_rate = 1.0;
      const Chromosome& parent = next.population.individuals.front().chromosome;
      const Chromosome mutated = mutate(s, always, next.model, parent, rng);
      check.expect(validate_chromosome(s, mutated).empty(), "invalid mutant");
      state = next;
    }
    if (check.failures.size() > 20) break;
  }
  check.expect(schemas >= 1000, "stopped after " + std::to_string(schemas) + " schemas");
}

void wire_contract(Check& check) {
  const MockBackend mock;
  testing::StubServer stub([&](const httplib::Request& req, httplib::Response& res, int) {
    const Json body = Json::parse(req.body);
    const PromptString prompt{body["prompt"].get<std::string>(), body["negative_prompt"].get<std::string>()};
    const Bytes png = mock.render(prompt, body["seed"].get<std::int64_t>(), {});
    res.set_content(Json{{"images", Json::array({base64_encode(png)})}}.dump(), "application/json");
  });
  testing::TempDir dir;
  ImageStore store(dir.path());
  SessionSettings settings;
  settings.master_seed = 5;
  settings.backend_id = "txt2img";
  settings.params.negative_prompt = "blurry";
  const Txt2ImgBackend backend(stub.url());
  const LiveSession live = LiveSession::create(settings, backend, store, {4, RetryPolicy{0, 1ms}});
  const auto seen = stub.seen();
  check.expect(seen.size() == 16, std::to_string(seen.size()) + " requests for 16 individuals");
  std::multiset<std::pair<std::string, std::int64_t>> requested, expected;
  for (const auto& r : seen) {
    check.expect(r.method == "POST" && r.path == "/sdapi/v1/txt2img", "request line " + r.method + " " + r.path);
    const Json body = Json::parse(r.body);
    std::set<std::string> keys;
    for (const auto& [k, v] : body.items()) keys.insert(k);
    check.expect(keys == std::set<std::string>{"prompt", "negative_prompt", "seed", "steps", "cfg_scale", "width",
                                               "height"},
                 "field names " + body.dump());
    check.expect(body["negative_prompt"] == "blurry", "negative prompt");
    check.expect(body["steps"] == 28 && body["cfg_scale"] == 7.0 && body["width"] == 512 && body["height"] == 512, "default params");
    requested.emplace(body["prompt"].get<std::string>(), body["seed"].get<std::int64_t>());
  }
  for (const auto& ind : live.population().individuals) expected.insert({ind.prompt.text, ind.chromosome.seed});
  check.expect(requested == expected, "requests do not map one-to-one onto individuals");

  // default policy: two retries after 0.5 s and 1 s
  testing::StubServer failing([](const httplib::Request&, httplib::Response& res, int) {
    res.status = 500;
    res.set_content("overloaded", "text/plain");
  });
  const auto start = std::chrono::steady_clock::now();
  try {
    generate(Txt2ImgBackend(failing.url()), store, {"p", ""}, 1, {}, RetryPolicy{});
    check.expect(false, "server error not reported");
  } catch (const Error& e) {
    check.expect(e.code() == ErrorCode::backend_error, "error code for HTTP 500");
  }
  const auto elapsed = std::chrono::steady_clock::now() - start;
  check.expect(failing.seen().size() == 3, std::to_string(failing.seen().size()) + " attempts");
  check.expect(elapsed >= 1500ms && elapsed < 5s, "retry timing " +
                                                      num(std::chrono::duration<double>(elapsed).count()) + " s");

  testing::StubServer slow([](const httplib::Request&, httplib::Response& res, int) {
    std::this_thread::sleep_for(1s);
    res.status = 500;
  });
  const auto t0 = std::chrono::steady_clock::now();
  try {
    generate(Txt2ImgBackend(slow.url(), 200ms), store, {"p", ""}, 1, {}, RetryPolicy{0, 1ms});
    check.expect(false, "timeout not reported");
  } catch (const Error& e) {
    check.expect(e.code() == ErrorCode::backend_unreachable, "error code for timeout");
  }
  check.expect(std::chrono::steady_clock::now() - t0 < 900ms, "timeout not enforced");
}

void linearizability(Check& check) {
  testing::TempDir dir;
  ServiceOptions options;
  options.data_dir = dir.path();
  options.generation.retry = RetryPolicy{0, 1ms};
  SessionService svc(options);
  std::vector<std::string> ids;
  for (int i = 0; i < 2; ++i) ids.push_back(svc.create_session({{"master_seed", 40 + i}})["session_id"]);

  std::atomic<int> unexpected{0};
  std::map<std::string, std::atomic<int>> evolved;
  for (const auto& id : ids) evolved[id] = 0;
  std::vector<std::thread> clients;
  for (int t = 0; t < 6; ++t) {
    clients.emplace_back([&, t] {
      Rng rng(static_cast<std::uint64_t>(t) + 1);
      for (int i = 0; i < 40; ++i) {
        const std::string& id = ids[rng.below(ids.size())];
        try {
          const auto action = rng.below(4);
          if (action < 2) {
            Json votes = Json::array();
            for (int k = 0; k < 16; ++k) votes.push_back(rng.below(3));
            svc.post_votes(id, {{"votes", votes}});
          } else if (action == 2) {
            svc.evolve(id);
            ++evolved[id];
          } else {
            (void)svc.session_summary(id);
          }
        } catch (const ApiError& e) {
          if (e.code() != "evolve_in_progress" && e.code() != "no_votes_recorded") ++unexpected;
        } catch (...) {
          ++unexpected;
        }
      }
    });
  }
  for (auto& c : clients) c.join();
  check.expect(unexpected == 0, std::to_string(unexpected.load()) + " unexpected errors");
  for (const auto& id : ids) {
    const fs::path file = session_path(dir.path(), id);
    const SessionRecord record = load_session(file);  // verifies the digest
    (void)replay_session(record);
    check.expect(record.generations.size() == static_cast<std::size_t>(evolved[id]) + 1,
                 "generation count differs from successful evolves");
    check.expect(svc.session_summary(id)["generation_number"] == evolved[id].load(), "in-memory state differs");
  }
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"convergence reproduction", convergence},
      {"selection distribution", selection},
      {"operator arithmetic exactness", exactness},
      {"mutation-rate calibration", mutation_rate},
      {"crossover inclusion statistics", crossover_inclusion},
      {"determinism suite", determinism},
      {"invariant suite", invariants},
      {"wire contract", wire_contract},
      {"service linearizability", linearizability},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Check check;
    try {
      run(check);
    } catch (const std::exception& e) {
      check.failures.push_back(std::string("exception: ") + e.what());
    }
    if (check.failures.empty()) {
      std::cout << "PASS " << name << "\n";
    } else {
      ++failed;
      std::cout << "FAIL " << name << ": " << check.failures.front();
      if (check.failures.size() > 1) std::cout << " (+" << check.failures.size() - 1 << " more)";
      std::cout << "\n";
    }
  }
  std::cout << std::flush;
  return failed ? 1 : 0;
}
