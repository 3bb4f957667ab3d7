#include "roughmarket/error.hpp"

namespace roughmarket {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonPositiveValue: return "NonPositiveValue";
    case ErrorCode::BadTimeGrid: return "BadTimeGrid";
    case ErrorCode::BadSpec: return "BadSpec";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::BadInterval: return "BadInterval";
    case ErrorCode::BadStep: return "BadStep";
    case ErrorCode::InadmissiblePhi: return "InadmissiblePhi";
    case ErrorCode::TruncationUnsafe: return "TruncationUnsafe";
    case ErrorCode::BoundViolated: return "BoundViolated";
    case ErrorCode::NonAdapted: return "NonAdapted";
    case ErrorCode::RuleOverflow: return "RuleOverflow";
    case ErrorCode::NegativeComponent: return "NegativeComponent";
    case ErrorCode::ZeroPrice: return "ZeroPrice";
    case ErrorCode::FormMismatch: return "FormMismatch";
    case ErrorCode::BadWeights: return "BadWeights";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::CaseFailure: return "CaseFailure";
    case ErrorCode::UnknownSeries: return "UnknownSeries";
  }
  return "Unknown";
}

}  // namespace roughmarket
