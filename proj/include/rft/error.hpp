#pragma once

#include <stdexcept>
#include <string>

namespace rft {

enum class ErrorCode {
  InvalidParameter,
  UnsupportedDimension,
  UnsupportedCombination,
  RegimeViolation,
  NoExcursions,
  Io,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidParameter: return "invalid-parameter";
    case ErrorCode::UnsupportedDimension: return "unsupported-dimension";
    case ErrorCode::UnsupportedCombination: return "unsupported-combination";
    case ErrorCode::RegimeViolation: return "regime-violation";
    case ErrorCode::NoExcursions: return "no-excursions";
    case ErrorCode::Io: return "io-error";
  }
  return "unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

namespace detail {

inline void require(bool ok, ErrorCode code, const std::string& what) {
  if (!ok) throw Error(code, what);
}

inline void require_param(bool ok, const std::string& what) {
  require(ok, ErrorCode::InvalidParameter, what);
}

}  // namespace detail
}  // namespace rft
