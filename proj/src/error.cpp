#include "subband/error.hpp"

namespace subband {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kConfig: return "ConfigError";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kPlacementFailure: return "PlacementFailure";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kNonFiniteValue: return "NonFiniteValue";
    case ErrorCode::kDisconnectedGraph: return "DisconnectedGraph";
    case ErrorCode::kDatasetEmpty: return "DatasetEmpty";
    case ErrorCode::kMixedSubbands: return "MixedSubbands";
    case ErrorCode::kFormatVersionMismatch: return "FormatVersionMismatch";
    case ErrorCode::kCorruptFile: return "CorruptFile";
    case ErrorCode::kUnknownAllocator: return "UnknownAllocator";
    case ErrorCode::kInternal: return "InternalError";
  }
  return "Unknown";
}

}  // namespace subband
