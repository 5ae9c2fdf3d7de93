#pragma once

#include <stdexcept>
#include <string>

namespace hysnet {

enum class ErrorCode {
  InvalidArgument,
  DistinctFrequencyViolation,
  DominantModeIsRigid,
  UnsupportedRegime,
  NoThreshold,
  InfiniteTriggerTime,
  NoSaddle,
  NoConvergence,
  SeedFailure,
  BranchStalled,
  IntegrationDiverged,
  IoError,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& msg)
      : std::runtime_error(msg), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace hysnet
