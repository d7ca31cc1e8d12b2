#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace eegcaps {

// Every failure raised by the library carries one of these codes. The CLI maps
// IoError to exit status 3 and everything else to exit status 2.
enum class ErrorCode {
  // signal
  InvalidBandEdges,
  EvenTaps,
  RecordingTooShort,
  InvalidRecording,
  InsufficientData,
  SegmentTooShort,
  BandOutsidePSD,
  // topomap
  SouthPoleSingularity,
  InvalidLayout,
  EmptyTrainingSet,
  // capsnet
  ShapeMismatch,
  EmptyBatch,
  InvalidConfig,
  // experiment
  ParseError,
  MissingRecording,
  DuplicateSubject,
  FoldImbalance,
  EmptyBandSet,
  EmptyTestSet,
  // synthgen
  DurationTooShort,
  InvalidArgument,
  // files
  FormatError,
  IoError,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

}  // namespace eegcaps
