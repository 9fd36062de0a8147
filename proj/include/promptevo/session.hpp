#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "promptevo/backend.hpp"
#include "promptevo/codec.hpp"
#include "promptevo/config.hpp"
#include "promptevo/engine.hpp"
#include "promptevo/generation_types.hpp"
#include "promptevo/generator.hpp"
#include "promptevo/image_store.hpp"
#include "promptevo/preference_model.hpp"
#include "promptevo/rng.hpp"
#include "promptevo/schema.hpp"

namespace promptevo {

inline constexpr std::string_view kSessionFormatVersion = "1.0";
inline constexpr std::string_view kModelFormatVersion = "1.0";

struct GenerationRecord {
  std::size_t generation_number = 0;
  std::vector<std::string> chromosomes;  // canonical strings
  std::vector<std::string> prompts;      // prompt texts
  std::vector<std::string> image_hashes;
  std::optional<VoteTally> tally;
  /// Random-stream state right after this generation was produced.
  std::string rng_checkpoint;

  friend bool operator==(const GenerationRecord&, const GenerationRecord&) = default;
};

struct SessionRecord {
  std::string session_id;
  std::string created_at;  // UTC, ISO 8601
  AttributeSchema schema;
  GAConfig config;
  std::string backend_id;
  GenerationParams params;
  std::uint64_t master_seed = 0;
  std::vector<GenerationRecord> generations;
  /// model_snapshots[k]: the preference model after generation k's votes.
  std::vector<PreferenceModel> model_snapshots;

  friend bool operator==(const SessionRecord&, const SessionRecord&) = default;
};

/// Session document text: the JSON body followed by a `sha256:<hex>` line
/// covering the body.
std::string serialize_session(const SessionRecord& record);
/// Throws Error(corrupt_record | version_mismatch | parse_error).
SessionRecord parse_session(std::string_view text);

/// Writes {data_dir}/sessions/{session_id}.json atomically; returns the path.
std::filesystem::path save_session(const SessionRecord& record, const std::filesystem::path& data_dir);
SessionRecord load_session(const std::filesystem::path& path);
std::filesystem::path session_path(const std::filesystem::path& data_dir, std::string_view session_id);

/// The prompting-free personalized model: everything needed to sample
/// preferred prompts without the session.
struct PersonalizedModelDocument {
  AttributeSchema schema;
  PreferenceModel model;
  std::string backend_id;
  GenerationParams params;
  std::size_t voted_generations = 0;

  friend bool operator==(const PersonalizedModelDocument&, const PersonalizedModelDocument&) = default;
};

/// Throws Error(no_votes_yet) before the first voted generation.
PersonalizedModelDocument export_model(const SessionRecord& record);
Json model_document_to_json(const PersonalizedModelDocument& doc);
std::string serialize_model_document(const PersonalizedModelDocument& doc);
/// Parses and checks the document (schema validity, model consistency).
PersonalizedModelDocument load_model_document(std::string_view text);

struct ReplayResult {
  EngineState state;
  Rng rng;
};

/// Re-runs the engine from master_seed over the recorded tallies and checks
/// every chromosome string, random-stream checkpoint and model snapshot.
/// Individuals get image refs rebuilt from the recorded hashes. Throws
/// Error(replay_mismatch) on the first divergence.
ReplayResult replay_session(const SessionRecord& record);

struct SessionSettings {
  AttributeSchema schema = kandinsky_default();
  GAConfig config;
  std::string backend_id = std::string(MockBackend::kId);
  GenerationParams params;
  std::uint64_t master_seed = 0;
};

struct GenerationOptions {
  std::size_t parallelism = 4;
  RetryPolicy retry;
};

/// Random 128-bit hex token.
std::string new_session_id();
std::string utc_timestamp_now();
bool is_session_id(std::string_view s);

/// An optimization run in progress: record, engine state and random stream,
/// advanced by votes and evolution. Failed steps leave the session unchanged.
class LiveSession {
 public:
  /// Builds generation 0 and renders its images. Throws GenerationFailure if
  /// any image cannot be produced.
  static LiveSession create(SessionSettings settings, const Backend& backend, ImageStore& store,
                            const GenerationOptions& options = {}, std::string session_id = {},
                            std::string created_at = {});

  /// Rebuilds the live state by replaying the record.
  static LiveSession resume(SessionRecord record);

  const SessionRecord& record() const { return record_; }
  const EngineState& state() const { return state_; }
  const Population& population() const { return state_.population; }
  std::size_t generation_number() const { return state_.population.generation_number; }
  const std::optional<VoteTally>& pending_tally() const { return record_.generations.back().tally; }

  /// The latest learned model (fresh before any vote).
  const PreferenceModel& current_model() const;

  /// Records (or overwrites) the current generation's tally.
  void record_votes(VoteTally tally);

  /// Evolves the voted current generation and renders the offspring.
  /// Throws Error(no_votes_recorded) without a tally.
  void evolve(const Backend& backend, ImageStore& store, const GenerationOptions& options = {});

 private:
  LiveSession(SessionRecord record, EngineState state, Rng rng)
      : record_(std::move(record)), state_(std::move(state)), rng_(std::move(rng)) {}

  static GenerationRecord describe_generation(const EngineState& state, const Rng& rng);
  static void attach_images(Population& population, const Backend& backend, ImageStore& store,
                            const GenerationParams& params, const GenerationOptions& options,
                            std::vector<std::string>& hashes);

  SessionRecord record_;
  EngineState state_;
  Rng rng_;
};

}  // namespace promptevo
