#include "pothole/error.hpp"

namespace pothole {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::NoValidDepth: return "NoValidDepth";
    case ErrorCode::EmptyRegion: return "EmptyRegion";
    case ErrorCode::NoValidPoints: return "NoValidPoints";
    case ErrorCode::TooFewCorrespondences: return "TooFewCorrespondences";
    case ErrorCode::SingularTransform: return "SingularTransform";
    case ErrorCode::OutOfOrderFrame: return "OutOfOrderFrame";
    case ErrorCode::Uninitialized: return "Uninitialized";
    case ErrorCode::ZeroConfidence: return "ZeroConfidence";
    case ErrorCode::EmptySeries: return "EmptySeries";
    case ErrorCode::ZeroMean: return "ZeroMean";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::ObjectiveNonFinite: return "ObjectiveNonFinite";
    case ErrorCode::DegenerateKernel: return "DegenerateKernel";
    case ErrorCode::PotholeNeverVisible: return "PotholeNeverVisible";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::TruncatedPayload: return "TruncatedPayload";
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace pothole
