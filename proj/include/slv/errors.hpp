#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace slv {

// Error taxonomy mirrors the CLI exit codes: validation errors reject bad
// input (exit 1), numerical errors mean an algorithm gave up (exit 2).
class Error : public std::runtime_error {
public:
  Error(std::string code, const std::string& detail)
      : std::runtime_error(detail), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

private:
  std::string code_;
};

class ValidationError : public Error {
public:
  using Error::Error;
};

class NumericalError : public Error {
public:
  using Error::Error;
};

namespace errc {
// validation
inline constexpr const char* r_invalid = "r_invalid";
inline constexpr const char* degenerate_matrix = "degenerate_matrix";
inline constexpr const char* invalid_spec = "invalid_spec";
inline constexpr const char* parse_error = "parse_error";
inline constexpr const char* precondition_failed = "precondition_failed";
inline constexpr const char* usage = "usage";
inline constexpr const char* io_error = "io_error";
// numerical
inline constexpr const char* step_failure = "step_failure";
inline constexpr const char* newton_divergence = "newton_divergence";
inline constexpr const char* no_return = "no_return";
inline constexpr const char* not_closed = "not_closed";
inline constexpr const char* bracket_failure = "bracket_failure";
}  // namespace errc

}  // namespace slv
