#include "semrel/error.hpp"

namespace semrel {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedRow: return "MalformedRow";
    case ErrorCode::kScoreOutOfRange: return "ScoreOutOfRange";
    case ErrorCode::kMissingScore: return "MissingScore";
    case ErrorCode::kDuplicateId: return "DuplicateId";
    case ErrorCode::kInvalidUtf8: return "InvalidUtf8";
    case ErrorCode::kEmptySentence: return "EmptySentence";
    case ErrorCode::kInvalidLanguage: return "InvalidLanguage";
    case ErrorCode::kMixedSplits: return "MixedSplits";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kNonFiniteScore: return "NonFiniteScore";
    case ErrorCode::kBackendFailure: return "BackendFailure";
    case ErrorCode::kUnsupportedLanguage: return "UnsupportedLanguage";
    case ErrorCode::kNoPrimaryBackend: return "NoPrimaryBackend";
    case ErrorCode::kInvalidBackend: return "InvalidBackend";
    case ErrorCode::kEmptyBatch: return "EmptyBatch";
    case ErrorCode::kZeroNorm: return "ZeroNorm";
    case ErrorCode::kNonFiniteGradient: return "NonFiniteGradient";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kUndefinedSpearman: return "UndefinedSpearman";
    case ErrorCode::kMissingModel: return "MissingModel";
    case ErrorCode::kInvalidCheckpoint: return "InvalidCheckpoint";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kWrongSplit: return "WrongSplit";
    case ErrorCode::kIo: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace semrel
