#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace lmdiff {

enum class ErrorCode {
  InvalidInput,
  Alignment,
  Format,
  Integrity,
  Version,
  Comparability,
  NotFound,
  Incomparable,
  BackendUnavailable,
};

/// Stable lowercase name used in API error bodies.
const char* error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string detail = {})
      : std::runtime_error(message), code_(code), detail_(std::move(detail)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

struct InvalidInput : Error {
  explicit InvalidInput(const std::string& msg, std::string detail = {})
      : Error(ErrorCode::InvalidInput, msg, std::move(detail)) {}
};

/// Two token sequences that should describe the same text do not line up.
/// `position` is the 1-based token position of the first divergence and
/// `phrase_index` is set when the failure happened inside a corpus scan.
struct AlignmentError : Error {
  AlignmentError(const std::string& msg, std::size_t position_,
                 std::ptrdiff_t phrase_index_ = -1)
      : Error(ErrorCode::Alignment, msg), position(position_), phrase_index(phrase_index_) {}
  std::size_t position;
  std::ptrdiff_t phrase_index;
};

struct FormatError : Error {
  explicit FormatError(const std::string& msg) : Error(ErrorCode::Format, msg) {}
};

struct IntegrityError : Error {
  explicit IntegrityError(const std::string& msg) : Error(ErrorCode::Integrity, msg) {}
};

struct VersionError : Error {
  explicit VersionError(const std::string& msg) : Error(ErrorCode::Version, msg) {}
};

struct ComparabilityError : Error {
  ComparabilityError(const std::string& msg, std::vector<std::string> reasons_)
      : Error(ErrorCode::Comparability, msg), reasons(std::move(reasons_)) {}
  std::vector<std::string> reasons;
};

struct NotFound : Error {
  explicit NotFound(const std::string& msg, std::string hint = {})
      : Error(ErrorCode::NotFound, msg, std::move(hint)) {}
};

struct Incomparable : Error {
  explicit Incomparable(const std::string& msg, std::string detail = {})
      : Error(ErrorCode::Incomparable, msg, std::move(detail)) {}
};

struct BackendUnavailable : Error {
  explicit BackendUnavailable(const std::string& msg, std::string detail = {})
      : Error(ErrorCode::BackendUnavailable, msg, std::move(detail)) {}
};

}  // namespace lmdiff
