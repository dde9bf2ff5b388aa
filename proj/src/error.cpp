#include "panelrect/error.hpp"

namespace panelrect {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid argument";
    case ErrorCode::WrongFrame: return "wrong coordinate frame";
    case ErrorCode::DegenerateDepth: return "degenerate depth";
    case ErrorCode::DegeneratePose: return "degenerate pose";
    case ErrorCode::DegenerateButton: return "degenerate button";
    case ErrorCode::EmptyPanel: return "empty panel";
    case ErrorCode::LineDetection: return "line detection failure";
    case ErrorCode::QuadAssembly: return "quadrilateral assembly failure";
    case ErrorCode::NoIntersection: return "no intersection";
    case ErrorCode::Ordering: return "corner ordering failure";
    case ErrorCode::NoSolution: return "no solution";
    case ErrorCode::OutOfFrame: return "out of frame";
    case ErrorCode::Overlap: return "overlapping buttons";
    case ErrorCode::Io: return "i/o error";
    case ErrorCode::Parse: return "parse error";
  }
  return "unknown error";
}

}  // namespace panelrect
