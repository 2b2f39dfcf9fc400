#include "lmdiff/error.hpp"

namespace lmdiff {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidInput: return "invalid_input";
    case ErrorCode::Alignment: return "alignment_error";
    case ErrorCode::Format: return "format_error";
    case ErrorCode::Integrity: return "integrity_error";
    case ErrorCode::Version: return "version_error";
    case ErrorCode::Comparability: return "comparability_error";
    case ErrorCode::NotFound: return "not_found";
    case ErrorCode::Incomparable: return "incomparable";
    case ErrorCode::BackendUnavailable: return "backend_unavailable";
  }
  return "error";
}

}  // namespace lmdiff
