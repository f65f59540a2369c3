#pragma once

#include <stdexcept>
#include <string>

namespace arspl {

enum class ErrorCode {
  kInvalidArgument,
  kDimensionMismatch,
  kIo,
  kUnsupportedFormat,
  kMalformedHeader,
  kTruncatedPayload,
  kUnsupportedMaxval,
  kInvalidManifest,
  kSvdFailure,
  kTrainingDiverged,
  kAlreadyLabeled,
  kPartialSuperpixel,
  kUnknownSuperpixel,
  kMissingGroundTruth,
  kAnnotatorAborted,
  kCheckpointFormat,
};

const char* to_string(ErrorCode code);

// Every failure raised by the library carries a code so callers (the HTTP
// service in particular) can map it onto a response without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace arspl
