#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace promptevo {

enum class ErrorCode {
  parse_error,
  validation_error,
  invalid_argument,
  invalid_chromosome,
  inconsistent_model,
  schema_mismatch,
  misaligned_tally,
  backend_unreachable,
  backend_error,
  store_io_error,
  io_error,
  version_mismatch,
  corrupt_record,
  replay_mismatch,
  no_votes_recorded,
  no_votes_yet,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace promptevo
