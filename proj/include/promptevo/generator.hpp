#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "promptevo/backend.hpp"
#include "promptevo/errors.hpp"
#include "promptevo/generation_types.hpp"
#include "promptevo/image_store.hpp"

namespace promptevo {

struct RetryPolicy {
  /// Attempts after the first failure.
  int max_retries = 2;
  /// Doubled after every failed attempt.
  std::chrono::milliseconds initial_backoff{500};
};

/// Renders one image, transcodes it to PNG and stores it. Transport and
/// server failures are retried per `retry`; the last failure is rethrown.
ImageRef generate(const Backend& backend, ImageStore& store, const PromptString& prompt, std::int64_t seed,
                  const GenerationParams& params, const RetryPolicy& retry = {});

struct GenerationItem {
  PromptString prompt;
  std::int64_t seed = 0;
};

struct IndexedError {
  std::size_t index = 0;
  ErrorCode code = ErrorCode::backend_error;
  std::string message;
};

struct BatchResult {
  /// Input order; empty where that entry failed.
  std::vector<std::optional<ImageRef>> images;
  std::vector<IndexedError> errors;

  bool complete() const { return errors.empty(); }
};

/// Raised when a batch cannot be used; carries every per-index failure.
class GenerationFailure : public Error {
 public:
  GenerationFailure(ErrorCode code, const std::string& message, std::vector<IndexedError> errors)
      : Error(code, message), errors_(std::move(errors)) {}
  const std::vector<IndexedError>& errors() const { return errors_; }

 private:
  std::vector<IndexedError> errors_;
};

/// One image per item with at most `parallelism` requests in flight. Failures
/// are reported per index; throws GenerationFailure only if every item fails.
BatchResult generate_population(const Backend& backend, ImageStore& store, std::span<const GenerationItem> items,
                                const GenerationParams& params, std::size_t parallelism,
                                const RetryPolicy& retry = {});

}  // namespace promptevo
