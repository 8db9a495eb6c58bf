#pragma once

#include <stdexcept>
#include <string>

namespace spikenet {

enum class ErrorCode {
  InvalidArgument,
  AllSilent,
  RangeTooLarge,
  OutOfDomain,
  TooFewSamples,
  NoConvergence,
  EmptyReference,
  EmptyDistribution,
  NonPositiveValue,
  UnknownScenario,
  ConfigError,
  IoError,
};

const char* error_code_name(ErrorCode code) noexcept;

// All library failures surface as this exception; the C API maps `code()`
// onto its status enum.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace spikenet
