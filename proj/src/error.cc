#include "complyfed/error.h"

namespace complyfed {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnknownFactor: return "UnknownFactor";
    case ErrorCode::kUnknownOption: return "UnknownOption";
    case ErrorCode::kZeroWeightSum: return "ZeroWeightSum";
    case ErrorCode::kOutOfRangeScore: return "OutOfRangeScore";
    case ErrorCode::kInvalidCatalog: return "InvalidCatalog";
    case ErrorCode::kProfileMismatch: return "ProfileMismatch";
    case ErrorCode::kInvalidSpec: return "InvalidSpec";
    case ErrorCode::kLayoutMismatch: return "LayoutMismatch";
    case ErrorCode::kEmptyDataset: return "EmptyDataset";
    case ErrorCode::kNegativeMu: return "NegativeMu";
    case ErrorCode::kInvalidDPConfig: return "InvalidDPConfig";
    case ErrorCode::kEmptyUpdateSet: return "EmptyUpdateSet";
    case ErrorCode::kNoEligibleClients: return "NoEligibleClients";
    case ErrorCode::kConfigMismatch: return "ConfigMismatch";
    case ErrorCode::kBadDims: return "BadDims";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kNonFiniteFeature: return "NonFiniteFeature";
    case ErrorCode::kEmptyFile: return "EmptyFile";
    case ErrorCode::kTooFewSamples: return "TooFewSamples";
    case ErrorCode::kNotImageData: return "NotImageData";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kMissingRun: return "MissingRun";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace complyfed
