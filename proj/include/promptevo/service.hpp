#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "promptevo/backend.hpp"
#include "promptevo/codec.hpp"
#include "promptevo/image_store.hpp"
#include "promptevo/session.hpp"

namespace httplib {
class Server;
}

namespace promptevo {

/// Error returned to API clients. Codes are stable identifiers.
class ApiError : public std::runtime_error {
 public:
  ApiError(std::string code, const std::string& message, int http_status, Json details = nullptr)
      : std::runtime_error(message), code_(std::move(code)), http_status_(http_status), details_(std::move(details)) {}

  const std::string& code() const { return code_; }
  int http_status() const { return http_status_; }
  const Json& details() const { return details_; }
  Json to_json() const;

 private:
  std::string code_;
  int http_status_;
  Json details_;
};

struct ServiceOptions {
  std::filesystem::path data_dir = "data";
  AttributeSchema default_schema = kandinsky_default();
  /// The backend sessions may use: "mock" or "txt2img".
  std::string backend_id = std::string(MockBackend::kId);
  std::string backend_url;
  std::chrono::milliseconds backend_timeout = std::chrono::seconds(120);
  GenerationOptions generation;
  std::string cors_origin = "*";
  std::optional<std::filesystem::path> static_dir;
};

/// Session registry and the operations behind every API route. Sessions live
/// in memory and are written through to {data_dir}/sessions; unknown ids are
/// resumed from disk on first access. Mutations of one session are mutually
/// exclusive: a second concurrent mutator gets ApiError evolve_in_progress.
class SessionService {
 public:
  explicit SessionService(ServiceOptions options);
  ~SessionService();

  /// {session_id, population}; body {schema?, config?, backend, params?, master_seed?}.
  Json create_session(const Json& body);
  Json post_votes(std::string_view session_id, const Json& body);
  Json evolve(std::string_view session_id);
  Json session_summary(std::string_view session_id);
  Json population(std::string_view session_id, std::optional<std::size_t> generation);
  /// Serialized personalized model document.
  std::string model_document(std::string_view session_id);
  Json sample(std::string_view session_id, const Json& body);
  std::optional<Bytes> image(std::string_view hash) const;

  const ServiceOptions& options() const { return options_; }
  ImageStore& store() { return store_; }

 private:
  struct Slot;
  std::shared_ptr<Slot> slot(std::string_view session_id);
  const Backend& backend_for(std::string_view id) const;
  Json population_payload(const SessionRecord& record, std::size_t generation) const;

  ServiceOptions options_;
  ImageStore store_;
  std::map<std::string, std::unique_ptr<Backend>, std::less<>> backends_;
  std::mutex registry_mutex_;
  std::map<std::string, std::shared_ptr<Slot>, std::less<>> sessions_;
};

/// Model telemetry for UIs: weight tables and continuous means/variances.
Json model_telemetry(const PreferenceModel& model);

/// HTTP front end for SessionService.
class HttpServer {
 public:
  explicit HttpServer(SessionService& service);
  ~HttpServer();

  /// Binds `port` (0 picks a free port) and returns the bound port; throws
  /// Error(io_error) when the port is unavailable.
  int bind(const std::string& host, int port);
  /// Serves until stop().
  void run();
  void stop();

 private:
  SessionService& service_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace promptevo
