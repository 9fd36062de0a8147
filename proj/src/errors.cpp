#include "promptevo/errors.hpp"

namespace promptevo {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::parse_error: return "parse_error";
    case ErrorCode::validation_error: return "validation_error";
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::invalid_chromosome: return "invalid_chromosome";
    case ErrorCode::inconsistent_model: return "inconsistent_model";
    case ErrorCode::schema_mismatch: return "schema_mismatch";
    case ErrorCode::misaligned_tally: return "misaligned_tally";
    case ErrorCode::backend_unreachable: return "backend_unreachable";
    case ErrorCode::backend_error: return "backend_error";
    case ErrorCode::store_io_error: return "store_io_error";
    case ErrorCode::io_error: return "io_error";
    case ErrorCode::version_mismatch: return "version_mismatch";
    case ErrorCode::corrupt_record: return "corrupt_record";
    case ErrorCode::replay_mismatch: return "replay_mismatch";
    case ErrorCode::no_votes_recorded: return "no_votes_recorded";
    case ErrorCode::no_votes_yet: return "no_votes_yet";
  }
  return "unknown";
}

}  // namespace promptevo
