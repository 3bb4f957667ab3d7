#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace roughmarket {

enum class ErrorCode {
  NonPositiveValue,
  BadTimeGrid,
  BadSpec,
  ParseError,
  TooLarge,
  BadInterval,
  BadStep,
  InadmissiblePhi,
  TruncationUnsafe,
  BoundViolated,
  NonAdapted,
  RuleOverflow,
  NegativeComponent,
  ZeroPrice,
  FormMismatch,
  BadWeights,
  ConfigError,
  CaseFailure,
  UnknownSeries,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace roughmarket
