#ifndef COMPLYFED_ERROR_H_
#define COMPLYFED_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace complyfed {

enum class ErrorCode {
  kUnknownFactor,
  kUnknownOption,
  kZeroWeightSum,
  kOutOfRangeScore,
  kInvalidCatalog,
  kProfileMismatch,
  kInvalidSpec,
  kLayoutMismatch,
  kEmptyDataset,
  kNegativeMu,
  kInvalidDPConfig,
  kEmptyUpdateSet,
  kNoEligibleClients,
  kConfigMismatch,
  kBadDims,
  kParseError,
  kNonFiniteFeature,
  kEmptyFile,
  kTooFewSamples,
  kNotImageData,
  kInvalidArgument,
  kMissingRun,
  kIoError,
};

std::string_view error_code_name(ErrorCode code);

// Every failure raised by the library carries one of the codes above so
// callers (and tests) can branch on the kind rather than the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string &message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace complyfed

#endif  // COMPLYFED_ERROR_H_
