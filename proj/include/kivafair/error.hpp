#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace kivafair {

enum class ErrorCode {
  kInvalidArgument,
  kDimensionMismatch,
  kEmptyTreatmentGroup,
  kEmptyControlGroup,
  kFileNotFound,
  kSchemaMismatch,
  kRowParseError,
  kUnknownSector,
  kMissingCountryData,
  kEmptyInput,
  kDegenerateSplit,
  kSingularDesign,
  kTooFewRows,
  kSingleClassInput,
  kDivergedSeparableData,
  kColumnMismatch,
  kLengthMismatch,
  kNumericalSingularity,
  kEmptyDraws,
  kInvalidSpec,
  kDegenerateTreatment,
  kIoError,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries a typed code so callers can
/// branch on the kind of error without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace kivafair
