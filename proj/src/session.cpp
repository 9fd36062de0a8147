#include "promptevo/session.hpp"

#include <algorithm>
#include <ctime>
#include <fstream>
#include <random>
#include <sstream>
#include <system_error>

#include "promptevo/errors.hpp"
#include "promptevo/prompt.hpp"

namespace promptevo {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kDigestPrefix = "sha256:";

Json generation_to_json(const GenerationRecord& g) {
  Json j;
  j["generation_number"] = g.generation_number;
  j["chromosomes"] = g.chromosomes;
  j["prompts"] = g.prompts;
  j["image_hashes"] = g.image_hashes;
  j["tally"] = g.tally ? tally_to_json(*g.tally) : Json(nullptr);
  j["rng_checkpoint"] = g.rng_checkpoint;
  return j;
}

GenerationRecord generation_from_json(const Json& j) {
  GenerationRecord g;
  g.generation_number = j.at("generation_number").get<std::size_t>();
  g.chromosomes = j.at("chromosomes").get<std::vector<std::string>>();
  g.prompts = j.at("prompts").get<std::vector<std::string>>();
  g.image_hashes = j.at("image_hashes").get<std::vector<std::string>>();
  if (!j.at("tally").is_null()) g.tally = tally_from_json(j.at("tally"));
  g.rng_checkpoint = j.at("rng_checkpoint").get<std::string>();
  if (g.prompts.size() != g.chromosomes.size() || g.image_hashes.size() != g.chromosomes.size() ||
      (g.tally && g.tally->votes.size() != g.chromosomes.size()))
    throw Error(ErrorCode::corrupt_record, "generation " + std::to_string(g.generation_number) +
                                               " has inconsistent lengths");
  return g;
}

Json record_to_json(const SessionRecord& r) {
  Json j;
  j["format_version"] = kSessionFormatVersion;
  j["session_id"] = r.session_id;
  j["created_at"] = r.created_at;
  j["master_seed"] = r.master_seed;
  j["backend_id"] = r.backend_id;
  j["params"] = params_to_json(r.params);
  j["config"] = config_to_json(r.config);
  j["schema"] = schema_to_json(r.schema);
  Json gens = Json::array();
  for (const auto& g : r.generations) gens.push_back(generation_to_json(g));
  j["generations"] = std::move(gens);
  Json snaps = Json::array();
  for (const auto& m : r.model_snapshots) snaps.push_back(model_to_json(m));
  j["model_snapshots"] = std::move(snaps);
  return j;
}

/// Major component of a "MAJOR.MINOR" version string, or -1.
int major_version(std::string_view v) {
  int major = 0;
  std::size_t i = 0;
  for (; i < v.size() && v[i] >= '0' && v[i] <= '9'; ++i) major = major * 10 + (v[i] - '0');
  return i == 0 ? -1 : major;
}

int supported_major(std::string_view v) { return major_version(v); }

void check_version(const Json& j, std::string_view supported, std::string_view what) {
  const auto it = j.find("format_version");
  if (it == j.end() || !it->is_string())
    throw Error(ErrorCode::corrupt_record, std::string(what) + " lacks a format_version");
  const std::string v = it->get<std::string>();
  const int major = major_version(v);
  if (major < 0) throw Error(ErrorCode::corrupt_record, std::string(what) + " has a malformed format_version");
  if (major != supported_major(supported))
    throw Error(ErrorCode::version_mismatch, std::string(what) + " format " + v + " is not supported (expected " +
                                                 std::string(supported) + ")");
}

}  // namespace

std::string serialize_session(const SessionRecord& record) {
  const std::string body = record_to_json(record).dump(2) + "\n";
  return body + std::string(kDigestPrefix) + sha256_hex(body) + "\n";
}

SessionRecord parse_session(std::string_view text) {
  // The digest line is the last line; everything before it is the body.
  std::string_view trimmed = text;
  if (!trimmed.empty() && trimmed.back() == '\n') trimmed.remove_suffix(1);
  const std::size_t split = trimmed.rfind('\n');
  const std::string_view body = split == std::string_view::npos ? std::string_view{} : text.substr(0, split + 1);
  const std::string_view digest_line = split == std::string_view::npos ? trimmed : trimmed.substr(split + 1);

  Json j;
  bool parsed = false;
  try {
    j = Json::parse(body);
    parsed = j.is_object();
  } catch (const nlohmann::json::exception&) {
  }
  // A newer format may change the integrity scheme, so the version decides first.
  if (parsed) check_version(j, kSessionFormatVersion, "session file");

  if (digest_line.substr(0, kDigestPrefix.size()) != kDigestPrefix ||
      digest_line.substr(kDigestPrefix.size()) != sha256_hex(body))
    throw Error(ErrorCode::corrupt_record, "session file failed its integrity check");
  if (!parsed) throw Error(ErrorCode::corrupt_record, "session body is not a JSON object");

  try {
    SessionRecord r;
    r.session_id = j.at("session_id").get<std::string>();
    r.created_at = j.at("created_at").get<std::string>();
    r.master_seed = j.at("master_seed").get<std::uint64_t>();
    r.backend_id = j.at("backend_id").get<std::string>();
    r.params = params_from_json(j.at("params"));
    r.config = config_from_json(j.at("config"));
    r.schema = schema_from_json(j.at("schema"));
    for (const auto& g : j.at("generations")) r.generations.push_back(generation_from_json(g));
    for (const auto& m : j.at("model_snapshots")) r.model_snapshots.push_back(model_from_json(m));
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::corrupt_record, std::string("session body is malformed: ") + e.what());
  }
}

fs::path session_path(const fs::path& data_dir, std::string_view session_id) {
  return data_dir / "sessions" / (std::string(session_id) + ".json");
}

fs::path save_session(const SessionRecord& record, const fs::path& data_dir) {
  if (!is_session_id(record.session_id))
    throw Error(ErrorCode::invalid_argument, "session id must be 32 lowercase hex digits");
  const fs::path path = session_path(data_dir, record.session_id);
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  if (ec) throw Error(ErrorCode::io_error, "cannot create " + path.parent_path().string() + ": " + ec.message());

  const std::string text = serialize_session(record);
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << text;
    out.close();
    if (!out) throw Error(ErrorCode::io_error, "failed writing " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::io_error, "failed replacing " + path.string() + ": " + ec.message());
  return path;
}

SessionRecord load_session(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open session file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_session(buf.str());
}

PersonalizedModelDocument export_model(const SessionRecord& record) {
  if (record.model_snapshots.empty())
    throw Error(ErrorCode::no_votes_yet, "the session has no voted generation yet");
  PersonalizedModelDocument doc;
  doc.schema = record.schema;
  doc.model = record.model_snapshots.back();
  doc.backend_id = record.backend_id;
  doc.params = record.params;
  doc.voted_generations = record.model_snapshots.size();
  return doc;
}

Json model_document_to_json(const PersonalizedModelDocument& doc) {
  Json j;
  j["format_version"] = kModelFormatVersion;
  j["kind"] = "personalized_prompting_model";
  j["style_keyword"] = doc.schema.style_keyword;
  j["voted_generations"] = doc.voted_generations;
  j["backend"] = Json{{"id", doc.backend_id}, {"params", params_to_json(doc.params)}};
  j["schema"] = schema_to_json(doc.schema);
  j["model"] = model_to_json(doc.model);
  return j;
}

std::string serialize_model_document(const PersonalizedModelDocument& doc) {
  return model_document_to_json(doc).dump(2) + "\n";
}

PersonalizedModelDocument load_model_document(std::string_view text) {
  const Json j = parse_json(text, "model document");
  if (!j.is_object()) throw Error(ErrorCode::parse_error, "model document: expected an object");
  check_version(j, kModelFormatVersion, "model document");
  PersonalizedModelDocument doc;
  try {
    doc.schema = schema_from_json(j.at("schema"));
    doc.model = model_from_json(j.at("model"));
    doc.backend_id = j.at("backend").at("id").get<std::string>();
    doc.params = params_from_json(j.at("backend").at("params"));
    doc.voted_generations = j.at("voted_generations").get<std::size_t>();
    if (j.at("style_keyword").get<std::string>() != doc.schema.style_keyword)
      throw Error(ErrorCode::validation_error, "model document: style_keyword disagrees with its schema");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("model document: ") + e.what());
  }
  if (auto v = validate_schema(doc.schema); !v.empty())
    throw Error(ErrorCode::validation_error, "model document schema: " + describe(v));
  require_consistent(doc.schema, doc.model);
  return doc;
}

namespace {

[[noreturn]] void mismatch(std::size_t generation, const std::string& what) {
  throw Error(ErrorCode::replay_mismatch, "replay diverges at generation " + std::to_string(generation) + ": " + what);
}

void attach_recorded_images(Population& population, const GenerationRecord& g, const std::string& backend_id) {
  for (std::size_t i = 0; i < population.size() && i < g.image_hashes.size(); ++i) {
    auto& ind = population.individuals[i];
    ImageRef ref;
    ref.content_hash = g.image_hashes[i];
    ref.backend_id = backend_id;
    ref.prompt_echo = ind.prompt;
    ref.seed = ind.chromosome.seed;
    ind.image = std::move(ref);
  }
}

}  // namespace

ReplayResult replay_session(const SessionRecord& record) {
  if (record.generations.empty()) throw Error(ErrorCode::corrupt_record, "session has no generations");
  Rng rng(record.master_seed);
  EngineState state = initial_state(record.schema, record.config, rng);

  std::size_t voted = 0;
  for (std::size_t k = 0; k < record.generations.size(); ++k) {
    const GenerationRecord& g = record.generations[k];
    if (g.generation_number != k) mismatch(k, "generation_number out of sequence");
    const Population& pop = state.population;
    if (g.chromosomes.size() != pop.size()) mismatch(k, "population size");
    for (std::size_t i = 0; i < pop.size(); ++i) {
      if (canonical_string(record.schema, pop.individuals[i].chromosome) != g.chromosomes[i])
        mismatch(k, "chromosome " + std::to_string(i));
      if (pop.individuals[i].prompt.text != g.prompts[i]) mismatch(k, "prompt " + std::to_string(i));
    }
    if (rng.checkpoint() != g.rng_checkpoint) mismatch(k, "random-stream checkpoint");
    attach_recorded_images(state.population, g, record.backend_id);

    if (!g.tally) {
      if (k + 1 != record.generations.size()) mismatch(k, "only the last generation may be unvoted");
      break;
    }
    ++voted;
    if (record.model_snapshots.size() < voted) mismatch(k, "missing model snapshot");
    const auto chromosomes = pop.chromosomes();
    const PreferenceModel snapshot = apply_votes(record.schema, record.config, state.model, chromosomes, *g.tally);
    if (!(snapshot == record.model_snapshots[voted - 1])) mismatch(k, "model snapshot");
    if (k + 1 < record.generations.size()) state = evolve(state, *g.tally, rng);
  }
  if (record.model_snapshots.size() != voted) mismatch(record.generations.size() - 1, "extra model snapshots");
  return {std::move(state), std::move(rng)};
}

std::string new_session_id() {
  std::random_device rd;
  static constexpr char kHex[] = "0123456789abcdef";
  std::string id;
  for (int i = 0; i < 8; ++i) {
    std::uint32_t word = rd();
    for (int n = 0; n < 4; ++n, word >>= 4) id.push_back(kHex[word & 0xF]);
  }
  return id;
}

std::string utc_timestamp_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

bool is_session_id(std::string_view s) {
  return s.size() == 32 && std::all_of(s.begin(), s.end(), [](char c) {
           return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
         });
}

GenerationRecord LiveSession::describe_generation(const EngineState& state, const Rng& rng) {
  GenerationRecord g;
  g.generation_number = state.population.generation_number;
  for (const auto& ind : state.population.individuals) {
    g.chromosomes.push_back(canonical_string(state.schema, ind.chromosome));
    g.prompts.push_back(ind.prompt.text);
  }
  g.rng_checkpoint = rng.checkpoint();
  return g;
}

void LiveSession::attach_images(Population& population, const Backend& backend, ImageStore& store,
                                const GenerationParams& params, const GenerationOptions& options,
                                std::vector<std::string>& hashes) {
  std::vector<GenerationItem> items;
  items.reserve(population.size());
  for (const auto& ind : population.individuals) items.push_back({ind.prompt, ind.chromosome.seed});
  BatchResult batch = generate_population(backend, store, items, params, options.parallelism, options.retry);
  if (!batch.complete()) {
    const auto& first = batch.errors.front();
    throw GenerationFailure(first.code,
                            std::to_string(batch.errors.size()) + " of " + std::to_string(items.size()) +
                                " images failed; first error (index " + std::to_string(first.index) +
                                "): " + first.message,
                            batch.errors);
  }
  hashes.clear();
  for (std::size_t i = 0; i < population.size(); ++i) {
    population.individuals[i].image = *batch.images[i];
    hashes.push_back(batch.images[i]->content_hash);
  }
}

LiveSession LiveSession::create(SessionSettings settings, const Backend& backend, ImageStore& store,
                                const GenerationOptions& options, std::string session_id, std::string created_at) {
  if (settings.backend_id != backend.id())
    throw Error(ErrorCode::invalid_argument, "backend '" + std::string(backend.id()) +
                                                 "' does not match session backend '" + settings.backend_id + "'");
  if (auto v = validate_params(settings.params); !v.empty())
    throw Error(ErrorCode::validation_error, "invalid generation params: " + describe(v));
  Rng rng(settings.master_seed);
  EngineState state = initial_state(settings.schema, settings.config, rng);

  SessionRecord record;
  record.session_id = session_id.empty() ? new_session_id() : std::move(session_id);
  record.created_at = created_at.empty() ? utc_timestamp_now() : std::move(created_at);
  record.schema = settings.schema;
  record.config = settings.config;
  record.backend_id = settings.backend_id;
  record.params = settings.params;
  record.master_seed = settings.master_seed;

  GenerationRecord g = describe_generation(state, rng);
  attach_images(state.population, backend, store, record.params, options, g.image_hashes);
  record.generations.push_back(std::move(g));
  return LiveSession(std::move(record), std::move(state), std::move(rng));
}

LiveSession LiveSession::resume(SessionRecord record) {
  ReplayResult replay = replay_session(record);
  return LiveSession(std::move(record), std::move(replay.state), std::move(replay.rng));
}

const PreferenceModel& LiveSession::current_model() const {
  return record_.model_snapshots.empty() ? state_.model : record_.model_snapshots.back();
}

void LiveSession::record_votes(VoteTally tally) {
  require_aligned(tally, state_.population.size());
  PreferenceModel snapshot =
      apply_votes(state_.schema, state_.config, state_.model, state_.population.chromosomes(), tally);
  GenerationRecord& current = record_.generations.back();
  if (current.tally) {
    record_.model_snapshots.back() = std::move(snapshot);
  } else {
    record_.model_snapshots.push_back(std::move(snapshot));
  }
  current.tally = std::move(tally);
}

void LiveSession::evolve(const Backend& backend, ImageStore& store, const GenerationOptions& options) {
  const auto& tally = record_.generations.back().tally;
  if (!tally) throw Error(ErrorCode::no_votes_recorded, "the current generation has no recorded votes");
  if (backend.id() != record_.backend_id)
    throw Error(ErrorCode::invalid_argument, "backend does not match the session backend");

  Rng rng = rng_;
  EngineState next = promptevo::evolve(state_, *tally, rng);
  GenerationRecord g = describe_generation(next, rng);
  attach_images(next.population, backend, store, record_.params, options, g.image_hashes);

  record_.generations.push_back(std::move(g));
  state_ = std::move(next);
  rng_ = std::move(rng);
}

}  // namespace promptevo
