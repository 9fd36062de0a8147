#include "promptevo/service.hpp"

#include <httplib.h>

#include <charconv>
#include <random>
#include <shared_mutex>

#include "promptevo/errors.hpp"
#include "promptevo/prompt.hpp"

namespace promptevo {

namespace fs = std::filesystem;

Json ApiError::to_json() const {
  Json err;
  err["code"] = code_;
  err["message"] = what();
  if (!details_.is_null()) err["details"] = details_;
  return Json{{"error", std::move(err)}};
}

namespace {

ApiError bad_request(std::string code, const std::string& message) { return ApiError(std::move(code), message, 400); }

/// Maps library errors onto API errors; `context` picks the 400 code used for
/// validation failures of client-supplied documents.
ApiError to_api_error(const Error& e, std::string_view invalid_code = "invalid_request") {
  Json details = nullptr;
  if (const auto* failure = dynamic_cast<const GenerationFailure*>(&e)) {
    details = Json::array();
    for (const auto& f : failure->errors())
      details.push_back(Json{{"index", f.index}, {"code", to_string(f.code)}, {"message", f.message}});
  }
  switch (e.code()) {
    case ErrorCode::backend_unreachable: return ApiError("backend_unreachable", e.what(), 502, std::move(details));
    case ErrorCode::backend_error: return ApiError("backend_error", e.what(), 502, std::move(details));
    case ErrorCode::no_votes_recorded: return ApiError("no_votes_recorded", e.what(), 409);
    case ErrorCode::no_votes_yet: return ApiError("no_votes_yet", e.what(), 409);
    case ErrorCode::misaligned_tally: return ApiError("invalid_votes", e.what(), 400);
    case ErrorCode::parse_error:
    case ErrorCode::validation_error:
    case ErrorCode::invalid_argument: return ApiError(std::string(invalid_code), e.what(), 400);
    case ErrorCode::corrupt_record:
    case ErrorCode::version_mismatch:
    case ErrorCode::replay_mismatch: return ApiError(std::string(to_string(e.code())), e.what(), 500);
    default: return ApiError("internal_error", e.what(), 500);
  }
}

std::uint64_t entropy_seed() {
  std::random_device rd;
  const std::uint64_t seed = (static_cast<std::uint64_t>(rd()) << 32) | rd();
  // Kept within 2^53 so JSON clients can echo it back exactly.
  return seed & ((std::uint64_t{1} << 53) - 1);
}

void reject_unknown(const Json& body, std::initializer_list<std::string_view> known) {
  for (const auto& [key, _] : body.items()) {
    bool ok = false;
    for (auto k : known) ok = ok || key == k;
    if (!ok) throw bad_request("invalid_request", "unknown field '" + key + "'");
  }
}

std::optional<std::uint64_t> optional_seed(const Json& body, std::string_view key) {
  const auto it = body.find(std::string(key));
  if (it == body.end() || it->is_null()) return std::nullopt;
  if (!it->is_number_unsigned() && !(it->is_number_integer() && it->get<std::int64_t>() >= 0))
    throw bad_request("invalid_request", "'" + std::string(key) + "' must be a non-negative integer");
  return it->get<std::uint64_t>();
}

}  // namespace

struct SessionService::Slot {
  explicit Slot(LiveSession s) : session(std::move(s)) {}

  std::mutex mutation;  // held for the whole of a vote or evolve
  std::shared_mutex state;
  LiveSession session;

  LiveSession snapshot() {
    std::shared_lock lock(state);
    return session;
  }
};

SessionService::SessionService(ServiceOptions options) : options_(std::move(options)), store_(options_.data_dir) {
  if (auto v = validate_schema(options_.default_schema); !v.empty())
    throw Error(ErrorCode::validation_error, "invalid default schema: " + describe(v));
  backends_.emplace(std::string(MockBackend::kId), std::make_unique<MockBackend>());
  if (!options_.backend_url.empty())
    backends_.emplace(std::string(Txt2ImgBackend::kId),
                      std::make_unique<Txt2ImgBackend>(options_.backend_url, options_.backend_timeout));
  if (!backends_.contains(options_.backend_id))
    throw Error(ErrorCode::invalid_argument, "backend '" + options_.backend_id + "' is not configured");
  std::error_code ec;
  fs::create_directories(options_.data_dir / "sessions", ec);
}

SessionService::~SessionService() = default;

const Backend& SessionService::backend_for(std::string_view id) const {
  const auto it = backends_.find(id);
  if (it == backends_.end()) throw bad_request("invalid_backend", "backend '" + std::string(id) + "' is not available");
  return *it->second;
}

std::shared_ptr<SessionService::Slot> SessionService::slot(std::string_view session_id) {
  const std::string id(session_id);
  auto not_found = [&] { return ApiError("session_not_found", "no session '" + id + "'", 404); };
  if (!is_session_id(id)) throw not_found();
  {
    std::lock_guard lock(registry_mutex_);
    if (auto it = sessions_.find(id); it != sessions_.end()) return it->second;
  }
  const fs::path path = session_path(options_.data_dir, id);
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) throw not_found();
  std::shared_ptr<Slot> loaded;
  try {
    loaded = std::make_shared<Slot>(LiveSession::resume(load_session(path)));
  } catch (const Error& e) {
    throw to_api_error(e);
  }
  std::lock_guard lock(registry_mutex_);
  return sessions_.try_emplace(id, std::move(loaded)).first->second;
}

Json model_telemetry(const PreferenceModel& model) {
  Json weights = Json::object();
  for (const auto& [attr, table] : model.weights) {
    Json t = Json::object();
    for (const auto& [value, w] : table) t[value] = w;
    weights[attr] = std::move(t);
  }
  Json means = Json::object();
  Json variances = Json::object();
  for (const auto& [attr, stats] : model.continuous) {
    means[attr] = stats.mean();
    variances[attr] = stats.variance(model.variance_floor);
  }
  return Json{{"weights", std::move(weights)},
              {"continuous_means", std::move(means)},
              {"continuous_variances", std::move(variances)}};
}

Json SessionService::population_payload(const SessionRecord& record, std::size_t generation) const {
  const GenerationRecord& g = record.generations.at(generation);
  Json individuals = Json::array();
  for (std::size_t i = 0; i < g.chromosomes.size(); ++i) {
    Json ind;
    ind["index"] = i;
    ind["chromosome"] = g.chromosomes[i];
    ind["prompt"] = g.prompts[i];
    ind["negative_prompt"] = record.params.negative_prompt;
    ind["image_url"] = "/images/" + g.image_hashes[i] + ".png";
    individuals.push_back(std::move(ind));
  }
  Json j;
  j["generation_number"] = g.generation_number;
  j["population_size"] = g.chromosomes.size();
  j["individuals"] = std::move(individuals);
  j["votes"] = g.tally ? tally_to_json(*g.tally) : Json(nullptr);
  return j;
}

Json SessionService::create_session(const Json& body) {
  if (!body.is_object()) throw bad_request("invalid_request", "request body must be a JSON object");
  reject_unknown(body, {"schema", "config", "backend", "params", "master_seed"});

  SessionSettings settings;
  settings.schema = options_.default_schema;
  settings.backend_id = options_.backend_id;
  if (const auto it = body.find("backend"); it != body.end()) {
    if (!it->is_string()) throw bad_request("invalid_backend", "'backend' must be a string");
    settings.backend_id = it->get<std::string>();
  }
  const Backend& backend = backend_for(settings.backend_id);

  try {
    if (const auto it = body.find("schema"); it != body.end() && !it->is_null()) {
      settings.schema = schema_from_json(*it);
      if (auto v = validate_schema(settings.schema); !v.empty())
        throw Error(ErrorCode::validation_error, "invalid schema: " + describe(v));
    }
  } catch (const Error& e) {
    throw to_api_error(e, "invalid_schema");
  }
  try {
    if (const auto it = body.find("config"); it != body.end() && !it->is_null()) {
      settings.config = config_from_json(*it);
      if (auto v = validate_config(settings.config); !v.empty())
        throw Error(ErrorCode::validation_error, "invalid config: " + describe(v));
    }
  } catch (const Error& e) {
    throw to_api_error(e, "invalid_config");
  }
  try {
    if (const auto it = body.find("params"); it != body.end() && !it->is_null()) {
      settings.params = params_from_json(*it);
      if (auto v = validate_params(settings.params); !v.empty())
        throw Error(ErrorCode::validation_error, "invalid params: " + describe(v));
    }
  } catch (const Error& e) {
    throw to_api_error(e, "invalid_params");
  }
  settings.master_seed = optional_seed(body, "master_seed").value_or(entropy_seed());

  std::shared_ptr<Slot> created;
  try {
    created = std::make_shared<Slot>(LiveSession::create(settings, backend, store_, options_.generation));
    save_session(created->session.record(), options_.data_dir);
  } catch (const Error& e) {
    throw to_api_error(e);
  }
  const SessionRecord& record = created->session.record();
  Json out;
  out["session_id"] = record.session_id;
  out["population"] = population_payload(record, 0);
  std::lock_guard lock(registry_mutex_);
  sessions_.emplace(record.session_id, std::move(created));
  return out;
}

Json SessionService::post_votes(std::string_view session_id, const Json& body) {
  auto s = slot(session_id);
  if (!body.is_object() || !body.contains("votes")) throw bad_request("invalid_votes", "body must be {\"votes\": [...]}");
  reject_unknown(body, {"votes"});
  VoteTally tally;
  try {
    tally = tally_from_json(body.at("votes"));
  } catch (const Error& e) {
    throw bad_request("invalid_votes", e.what());
  }

  std::unique_lock mutation(s->mutation, std::try_to_lock);
  if (!mutation.owns_lock())
    throw ApiError("evolve_in_progress", "another mutation of this session is in progress", 409);
  LiveSession next = s->snapshot();
  try {
    next.record_votes(tally);
    save_session(next.record(), options_.data_dir);
  } catch (const Error& e) {
    throw to_api_error(e, "invalid_votes");
  }
  Json out;
  out["accepted"] = true;
  out["generation_number"] = next.generation_number();
  out["total_votes"] = tally.total();
  std::unique_lock lock(s->state);
  s->session = std::move(next);
  return out;
}

Json SessionService::evolve(std::string_view session_id) {
  auto s = slot(session_id);
  std::unique_lock mutation(s->mutation, std::try_to_lock);
  if (!mutation.owns_lock())
    throw ApiError("evolve_in_progress", "another mutation of this session is in progress", 409);
  LiveSession next = s->snapshot();
  if (!next.pending_tally())
    throw ApiError("no_votes_recorded", "vote on the current generation before evolving", 409);
  const Backend& backend = backend_for(next.record().backend_id);
  try {
    next.evolve(backend, store_, options_.generation);
    save_session(next.record(), options_.data_dir);
  } catch (const Error& e) {
    throw to_api_error(e);
  }
  Json out = population_payload(next.record(), next.generation_number());
  out["model"] = model_telemetry(next.current_model());
  std::unique_lock lock(s->state);
  s->session = std::move(next);
  return out;
}

Json SessionService::session_summary(std::string_view session_id) {
  const LiveSession live = slot(session_id)->snapshot();
  const SessionRecord& r = live.record();
  Json gens = Json::array();
  for (const auto& g : r.generations)
    gens.push_back(Json{{"generation_number", g.generation_number},
                        {"voted", g.tally.has_value()},
                        {"total_votes", g.tally ? Json(g.tally->total()) : Json(nullptr)}});
  Json j;
  j["session_id"] = r.session_id;
  j["created_at"] = r.created_at;
  j["backend_id"] = r.backend_id;
  j["master_seed"] = r.master_seed;
  j["params"] = params_to_json(r.params);
  j["config"] = config_to_json(r.config);
  j["schema"] = schema_to_json(r.schema);
  j["generation_number"] = live.generation_number();
  j["generations"] = std::move(gens);
  j["model"] = model_telemetry(live.current_model());
  return j;
}

Json SessionService::population(std::string_view session_id, std::optional<std::size_t> generation) {
  const LiveSession live = slot(session_id)->snapshot();
  const std::size_t k = generation.value_or(live.generation_number());
  if (k >= live.record().generations.size())
    throw ApiError("generation_not_found", "no generation " + std::to_string(k), 404);
  return population_payload(live.record(), k);
}

std::string SessionService::model_document(std::string_view session_id) {
  const LiveSession live = slot(session_id)->snapshot();
  try {
    return serialize_model_document(export_model(live.record()));
  } catch (const Error& e) {
    throw to_api_error(e);
  }
}

Json SessionService::sample(std::string_view session_id, const Json& body) {
  const LiveSession live = slot(session_id)->snapshot();
  if (!body.is_object()) throw bad_request("invalid_request", "request body must be a JSON object");
  reject_unknown(body, {"count", "seed"});
  const auto count_it = body.find("count");
  if (count_it == body.end() || !count_it->is_number_integer() || count_it->get<std::int64_t>() < 1 ||
      count_it->get<std::int64_t>() > 1000)
    throw bad_request("invalid_request", "'count' must be an integer in [1, 1000]");
  const auto count = count_it->get<std::size_t>();

  PersonalizedModelDocument doc;
  try {
    doc = export_model(live.record());
  } catch (const Error& e) {
    throw to_api_error(e);
  }
  Rng rng(optional_seed(body, "seed").value_or(entropy_seed()));
  Json prompts = Json::array();
  for (std::size_t i = 0; i < count; ++i) {
    auto [chromosome, prompt] = sample_prompt(doc.schema, doc.model, rng, doc.params.negative_prompt);
    prompts.push_back(Json{{"text", prompt.text},
                           {"negative_text", prompt.negative_text},
                           {"chromosome", canonical_string(doc.schema, chromosome)}});
  }
  return Json{{"prompts", std::move(prompts)}};
}

std::optional<Bytes> SessionService::image(std::string_view hash) const { return store_.read(hash); }

// ---------------------------------------------------------------------------

namespace {

void send_json(httplib::Response& res, const Json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

template <typename Fn>
void respond(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const ApiError& e) {
    send_json(res, e.to_json(), e.http_status());
  } catch (const Error& e) {
    const ApiError api = to_api_error(e);
    send_json(res, api.to_json(), api.http_status());
  } catch (const std::exception& e) {
    send_json(res, ApiError("internal_error", e.what(), 500).to_json(), 500);
  }
}

Json request_body(const httplib::Request& req) {
  if (req.body.empty()) return Json::object();
  try {
    return parse_json(req.body, "request body");
  } catch (const Error& e) {
    throw bad_request("invalid_request", e.what());
  }
}

}  // namespace

HttpServer::HttpServer(SessionService& service) : service_(service), server_(std::make_unique<httplib::Server>()) {
  auto& srv = *server_;
  // Default options add SO_REUSEPORT, which lets a second server share a busy port.
  srv.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  const std::string origin = service_.options().cors_origin;
  if (!origin.empty()) {
    srv.set_default_headers({{"Access-Control-Allow-Origin", origin},
                             {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                             {"Access-Control-Allow-Headers", "Content-Type"}});
  }
  srv.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  srv.Get("/health", [](const httplib::Request&, httplib::Response& res) { send_json(res, Json{{"status", "ok"}}); });

  srv.Post("/api/sessions", [this](const httplib::Request& req, httplib::Response& res) {
    respond(res, [&] { send_json(res, service_.create_session(request_body(req)), 201); });
  });
  srv.Post(R"(/api/sessions/([^/]+)/votes)", [this](const httplib::Request& req, httplib::Response& res) {
    respond(res, [&] { send_json(res, service_.post_votes(req.matches[1].str(), request_body(req))); });
  });
  srv.Post(R"(/api/sessions/([^/]+)/evolve)", [this](const httplib::Request& req, httplib::Response& res) {
    respond(res, [&] { send_json(res, service_.evolve(req.matches[1].str())); });
  });
  srv.Get(R"(/api/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    respond(res, [&] { send_json(res, service_.session_summary(req.matches[1].str())); });
  });
  srv.Get(R"(/api/sessions/([^/]+)/population)", [this](const httplib::Request& req, httplib::Response& res) {
    respond(res, [&] {
      std::optional<std::size_t> generation;
      if (req.has_param("generation")) {
        const std::string text = req.get_param_value("generation");
        std::size_t value = 0;
        const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
        if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty())
          throw bad_request("invalid_request", "'generation' must be a non-negative integer");
        generation = value;
      }
      send_json(res, service_.population(req.matches[1].str(), generation));
    });
  });
  srv.Get(R"(/api/sessions/([^/]+)/model)", [this](const httplib::Request& req, httplib::Response& res) {
    respond(res, [&] { res.set_content(service_.model_document(req.matches[1].str()), "application/json"); });
  });
  srv.Post(R"(/api/sessions/([^/]+)/model/sample)", [this](const httplib::Request& req, httplib::Response& res) {
    respond(res, [&] { send_json(res, service_.sample(req.matches[1].str(), request_body(req))); });
  });
  srv.Get(R"(/images/([0-9a-f]{64})\.png)", [this](const httplib::Request& req, httplib::Response& res) {
    respond(res, [&] {
      auto bytes = service_.image(req.matches[1].str());
      if (!bytes) throw ApiError("image_not_found", "no such image", 404);
      res.set_content(std::string(bytes->begin(), bytes->end()), "image/png");
    });
  });

  if (const auto& dir = service_.options().static_dir) srv.set_mount_point("/", dir->string());

  srv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty() && res.status == 404)
      send_json(res, ApiError("not_found", "no such route or resource", 404).to_json(), 404);
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = server_->bind_to_any_port(host);
    if (bound < 0) throw Error(ErrorCode::io_error, "cannot bind " + host);
    return bound;
  }
  if (!server_->bind_to_port(host, port))
    throw Error(ErrorCode::io_error, "cannot bind " + host + ":" + std::to_string(port) + " (port busy?)");
  return port;
}

void HttpServer::run() { server_->listen_after_bind(); }

void HttpServer::stop() {
  if (server_) server_->stop();
}

}  // namespace promptevo
