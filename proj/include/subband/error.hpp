#pragma once

#include <stdexcept>
#include <string>

namespace subband {

// Values mirror sb_status in subband.h; keep the two in sync.
enum class ErrorCode {
  kInvalidArgument = 1,
  kConfig = 2,
  kIo = 3,
  kPlacementFailure = 4,
  kShapeMismatch = 5,
  kNonFiniteValue = 6,
  kDisconnectedGraph = 7,
  kDatasetEmpty = 8,
  kMixedSubbands = 9,
  kFormatVersionMismatch = 10,
  kCorruptFile = 11,
  kUnknownAllocator = 12,
  kInternal = 13,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

const char* to_string(ErrorCode code) noexcept;

}  // namespace subband
