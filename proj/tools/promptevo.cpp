// promptevo: run the voting service, reproduce convergence with a simulated
// voter, sample prompts from exported models, render and validate artifacts.
//
// Exit codes: 0 success, 1 runtime failure or unmet convergence thresholds,
// 2 usage or validation error.

#include <CLI11.hpp>

#include <cctype>
#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "promptevo/chromosome.hpp"
#include "promptevo/codec.hpp"
#include "promptevo/errors.hpp"
#include "promptevo/oracle.hpp"
#include "promptevo/prompt.hpp"
#include "promptevo/schema.hpp"
#include "promptevo/service.hpp"
#include "promptevo/session.hpp"
#include "promptevo/simulation.hpp"

namespace fs = std::filesystem;
using namespace promptevo;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Error(ErrorCode::io_error, "cannot write " + path.string());
}

AttributeSchema schema_or_default(const std::string& path) {
  if (path.empty()) return kandinsky_default();
  try {
    return load_schema(read_file(path));
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

HttpServer* g_server = nullptr;

extern "C" void handle_stop_signal(int) {
  if (g_server) g_server->stop();
}

struct ServeArgs {
  std::string data_dir = "data";
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string backend = "mock";
  std::string backend_url;
  std::string schema;
  std::string ui_dir;
  std::string cors_origin = "*";
  std::size_t parallelism = 4;
  int timeout_seconds = 120;
};

int run_serve(const ServeArgs& args) {
  if (args.backend == "txt2img" && args.backend_url.empty())
    throw UsageError("--backend txt2img requires --backend-url");
  ServiceOptions options;
  options.data_dir = args.data_dir;
  options.default_schema = schema_or_default(args.schema);
  options.backend_id = args.backend;
  options.backend_url = args.backend_url;
  options.backend_timeout = std::chrono::seconds(args.timeout_seconds);
  options.generation.parallelism = args.parallelism;
  options.cors_origin = args.cors_origin;
  if (!args.ui_dir.empty()) options.static_dir = args.ui_dir;

  SessionService service(options);
  HttpServer server(service);
  const int port = server.bind(args.host, args.port);
  g_server = &server;
  std::signal(SIGINT, handle_stop_signal);
  std::signal(SIGTERM, handle_stop_signal);
  std::cout << "listening on http://" << args.host << ":" << port << " (backend " << args.backend << ")" << std::endl;
  server.run();
  g_server = nullptr;
  return kExitOk;
}

struct SimulateArgs {
  std::string schema;
  std::string profile;
  std::string config;
  std::size_t generations = 5;
  std::size_t runs = 20;
  std::uint64_t master_seed = 1;
  std::string report;
  bool images = false;
  std::size_t threads = 1;
};

int run_simulate(const SimulateArgs& args) {
  SimulationOptions opt;
  opt.schema = schema_or_default(args.schema);
  try {
    opt.profile = load_profile(read_file(args.profile), opt.schema);
    if (!args.config.empty()) {
      opt.config = config_from_json(parse_json(read_file(args.config), "config"));
      if (auto v = validate_config(opt.config); !v.empty())
        throw Error(ErrorCode::validation_error, "invalid config: " + describe(v));
    }
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  opt.generations = args.generations;
  opt.runs = args.runs;
  opt.master_seed = args.master_seed;
  opt.threads = args.threads;
  const fs::path out_dir = args.report;
  if (args.images) opt.image_dir = out_dir;

  fs::create_directories(out_dir);
  SimulationReport report;
  try {
    report = run_simulation(opt);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::validation_error) throw UsageError(e.what());
    throw;
  }
  write_file(out_dir / "metrics.csv", report_csv(report, opt.schema));
  write_file(out_dir / "summary.json", summary_to_json(report, opt).dump(2) + "\n");

  const auto& s = report.summary;
  std::cout << "generation " << s.final_generation << ": median match_rate_single " << s.median_match_rate_single
            << ", median multi_overlap " << s.median_multi_overlap << " over " << opt.runs << " runs ("
            << report.seconds << " s) -> " << (s.passed ? "PASS" : "FAIL") << "\n";
  return s.passed ? kExitOk : kExitFailure;
}

int run_sample(const std::string& model_path, std::size_t count, std::uint64_t seed) {
  PersonalizedModelDocument doc;
  try {
    doc = load_model_document(read_file(model_path));
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  Rng rng(seed);
  for (std::size_t i = 0; i < count; ++i)
    std::cout << sample_prompt(doc.schema, doc.model, rng, doc.params.negative_prompt).second.text << "\n";
  return kExitOk;
}

int run_render(const std::string& chromosome_path, const std::string& schema_path) {
  const AttributeSchema schema = schema_or_default(schema_path);
  try {
    std::string text = read_file(chromosome_path);
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.pop_back();
    const Chromosome c = parse_canonical_string(schema, text);
    std::cout << render_prompt(schema, c).text << "\n";
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  return kExitOk;
}

int run_validate_schema(const std::string& path) {
  std::vector<Violation> violations;
  try {
    const AttributeSchema schema = schema_from_json(parse_json(read_file(path), "schema document"));
    violations = validate_schema(schema);
  } catch (const Error& e) {
    std::cerr << path << ": " << e.what() << "\n";
    return kExitUsage;
  }
  if (violations.empty()) {
    std::cout << path << ": ok\n";
    return kExitOk;
  }
  for (const auto& v : violations)
    std::cout << path << ": " << (v.attribute.empty() ? "<schema>" : v.attribute) << ": " << v.rule << ": "
              << v.message << "\n";
  return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interactive evolutionary prompt optimization"};
  app.require_subcommand(1);

  ServeArgs serve;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP voting service");
  serve_cmd->add_option("--data-dir", serve.data_dir, "Directory for sessions and images")->capture_default_str();
  serve_cmd->add_option("--host", serve.host, "Listen address")->capture_default_str();
  serve_cmd->add_option("--port", serve.port, "Listen port (0 picks a free port)")->capture_default_str();
  serve_cmd->add_option("--backend", serve.backend, "Image backend")
      ->check(CLI::IsMember({"mock", "txt2img"}))
      ->capture_default_str();
  serve_cmd->add_option("--backend-url", serve.backend_url, "Base URL of the txt2img server");
  serve_cmd->add_option("--backend-timeout", serve.timeout_seconds, "Per-request timeout in seconds")
      ->capture_default_str();
  serve_cmd->add_option("--schema", serve.schema, "Attribute schema file (default: built-in Kandinsky)");
  serve_cmd->add_option("--ui-dir", serve.ui_dir, "Directory with the built voting UI, served at /");
  serve_cmd->add_option("--cors-origin", serve.cors_origin, "Allowed CORS origin")->capture_default_str();
  serve_cmd->add_option("--parallelism", serve.parallelism, "Concurrent image requests")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Run oracle-voted optimization runs and report convergence");
  sim_cmd->add_option("--schema", sim.schema, "Attribute schema file (default: built-in Kandinsky)");
  sim_cmd->add_option("--profile", sim.profile, "Oracle preference profile file")->required();
  sim_cmd->add_option("--config", sim.config, "GA config file (JSON, partial allowed)");
  sim_cmd->add_option("--generations", sim.generations, "Generations per run")->capture_default_str();
  sim_cmd->add_option("--runs", sim.runs, "Independent runs")->check(CLI::PositiveNumber)->capture_default_str();
  sim_cmd->add_option("--master-seed", sim.master_seed, "Master seed")->capture_default_str();
  sim_cmd->add_option("--report", sim.report, "Output directory for metrics.csv and summary.json")->required();
  sim_cmd->add_option("--threads", sim.threads, "Parallel runs")->check(CLI::PositiveNumber)->capture_default_str();
  auto* images_flag = sim_cmd->add_flag("--images", sim.images, "Render every individual with the mock backend");
  sim_cmd->add_flag("--no-images", "Genotype-only mode (default)")->excludes(images_flag);

  std::string model_path;
  std::size_t count = 1;
  std::uint64_t sample_seed = 0;
  auto* sample_cmd = app.add_subcommand("sample", "Print prompts drawn from a personalized model document");
  sample_cmd->add_option("--model", model_path, "Personalized model document")->required();
  sample_cmd->add_option("--count", count, "Number of prompts")->check(CLI::PositiveNumber)->capture_default_str();
  sample_cmd->add_option("--seed", sample_seed, "Random seed")->capture_default_str();

  std::string chromosome_path;
  std::string render_schema;
  auto* render_cmd = app.add_subcommand("render", "Render a canonical chromosome file to its prompt");
  render_cmd->add_option("--chromosome", chromosome_path, "File holding a canonical chromosome string")->required();
  render_cmd->add_option("--schema", render_schema, "Attribute schema file (default: built-in Kandinsky)");

  std::string validate_path;
  auto* validate_cmd = app.add_subcommand("validate-schema", "Validate an attribute schema file");
  validate_cmd->add_option("file", validate_path, "Schema file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*serve_cmd) return run_serve(serve);
    if (*sim_cmd) return run_simulate(sim);
    if (*sample_cmd) return run_sample(model_path, count, sample_seed);
    if (*render_cmd) return run_render(chromosome_path, render_schema);
    if (*validate_cmd) return run_validate_schema(validate_path);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}
