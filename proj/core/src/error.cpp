#include "eegcaps/error.hpp"

namespace eegcaps {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidBandEdges: return "InvalidBandEdges";
    case ErrorCode::EvenTaps: return "EvenTaps";
    case ErrorCode::RecordingTooShort: return "RecordingTooShort";
    case ErrorCode::InvalidRecording: return "InvalidRecording";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::SegmentTooShort: return "SegmentTooShort";
    case ErrorCode::BandOutsidePSD: return "BandOutsidePSD";
    case ErrorCode::SouthPoleSingularity: return "SouthPoleSingularity";
    case ErrorCode::InvalidLayout: return "InvalidLayout";
    case ErrorCode::EmptyTrainingSet: return "EmptyTrainingSet";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::MissingRecording: return "MissingRecording";
    case ErrorCode::DuplicateSubject: return "DuplicateSubject";
    case ErrorCode::FoldImbalance: return "FoldImbalance";
    case ErrorCode::EmptyBandSet: return "EmptyBandSet";
    case ErrorCode::EmptyTestSet: return "EmptyTestSet";
    case ErrorCode::DurationTooShort: return "DurationTooShort";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace eegcaps
