#pragma once

#include <stdexcept>
#include <string>

namespace perch {

enum class ErrorCode {
  kInvalidArgument,
  kDegenerateOrientation,
  kBehindCamera,
  kDistortionInversion,
  kDegenerateConfiguration,
  kNotFound,
  kNumerical,
  kContractViolation,
  kCalibration,
  kStepSize,
  kConfig,
  kEmptyInput,
};

inline const char *to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kDegenerateOrientation: return "degenerate-orientation";
    case ErrorCode::kBehindCamera: return "behind-camera";
    case ErrorCode::kDistortionInversion: return "distortion-inversion";
    case ErrorCode::kDegenerateConfiguration: return "degenerate-configuration";
    case ErrorCode::kNotFound: return "not-found";
    case ErrorCode::kNumerical: return "numerical";
    case ErrorCode::kContractViolation: return "contract-violation";
    case ErrorCode::kCalibration: return "calibration";
    case ErrorCode::kStepSize: return "step-size";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kEmptyInput: return "empty-input";
  }
  return "unknown";
}

/// Single exception type for the library; the code tells callers which
/// contract was broken.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string &what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace perch
