#include "csm/error.hpp"

namespace csm {

std::string_view error_class_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUsage: return "UsageError";
    case ErrorCode::kInvalidInput: return "InvalidInput";
    case ErrorCode::kInvalidLevel: return "InvalidLevel";
    case ErrorCode::kDegenerateMarginal: return "DegenerateMarginal";
    case ErrorCode::kInvalidRank: return "InvalidRank";
    case ErrorCode::kSingularConditioning: return "SingularConditioning";
    case ErrorCode::kInvalidMode: return "InvalidMode";
    case ErrorCode::kLayoutMismatch: return "LayoutMismatch";
    case ErrorCode::kCorrespondenceError: return "CorrespondenceError";
    case ErrorCode::kMissingRecord: return "MissingRecord";
    case ErrorCode::kFormatError: return "FormatError";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kInvalidTask: return "InvalidTask";
    case ErrorCode::kIoError: return "IoError";
  }
  return "UnknownError";
}

}  // namespace csm
