#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace semrel {

enum class ErrorCode {
  kMalformedRow,
  kScoreOutOfRange,
  kMissingScore,
  kDuplicateId,
  kInvalidUtf8,
  kEmptySentence,
  kInvalidLanguage,
  kMixedSplits,
  kEmptyInput,
  kLengthMismatch,
  kNonFiniteScore,
  kBackendFailure,
  kUnsupportedLanguage,
  kNoPrimaryBackend,
  kInvalidBackend,
  kEmptyBatch,
  kZeroNorm,
  kNonFiniteGradient,
  kShapeMismatch,
  kUndefinedSpearman,
  kMissingModel,
  kInvalidCheckpoint,
  kInvalidConfig,
  kWrongSplit,
  kIo,
};

std::string_view to_string(ErrorCode code);

// All library failures surface as this exception; code() is the stable
// discriminator, what() carries the human-readable context.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace semrel
