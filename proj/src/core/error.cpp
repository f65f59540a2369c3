#include "arspl/core/error.hpp"

namespace arspl {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kIo: return "Io";
    case ErrorCode::kUnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::kMalformedHeader: return "MalformedHeader";
    case ErrorCode::kTruncatedPayload: return "TruncatedPayload";
    case ErrorCode::kUnsupportedMaxval: return "UnsupportedMaxval";
    case ErrorCode::kInvalidManifest: return "InvalidManifest";
    case ErrorCode::kSvdFailure: return "SvdFailure";
    case ErrorCode::kTrainingDiverged: return "TrainingDiverged";
    case ErrorCode::kAlreadyLabeled: return "AlreadyLabeled";
    case ErrorCode::kPartialSuperpixel: return "PartialSuperpixel";
    case ErrorCode::kUnknownSuperpixel: return "UnknownSuperpixel";
    case ErrorCode::kMissingGroundTruth: return "MissingGroundTruth";
    case ErrorCode::kAnnotatorAborted: return "AnnotatorAborted";
    case ErrorCode::kCheckpointFormat: return "CheckpointFormat";
  }
  return "Unknown";
}

}  // namespace arspl
