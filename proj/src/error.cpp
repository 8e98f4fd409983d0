#include "ivm/error.hpp"

namespace ivm {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedQuery: return "MalformedQuery";
    case ErrorCode::NotAcyclic: return "NotAcyclic";
    case ErrorCode::NotFreeConnex: return "NotFreeConnex";
    case ErrorCode::UnknownRelation: return "UnknownRelation";
    case ErrorCode::UnmappedRelation: return "UnmappedRelation";
    case ErrorCode::CursorInvalidated: return "CursorInvalidated";
    case ErrorCode::UpdateInFlight: return "UpdateInFlight";
    case ErrorCode::RingMismatch: return "RingMismatch";
    case ErrorCode::NotAResult: return "NotAResult";
    case ErrorCode::OutputNotEmpty: return "OutputNotEmpty";
    case ErrorCode::TypeMismatch: return "TypeMismatch";
    case ErrorCode::BadGraphFile: return "BadGraphFile";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

}  // namespace ivm
