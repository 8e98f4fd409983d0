#pragma once

#include <stdexcept>
#include <string>

namespace ivm {

enum class ErrorCode {
  MalformedQuery,
  NotAcyclic,
  NotFreeConnex,
  UnknownRelation,
  UnmappedRelation,
  CursorInvalidated,
  UpdateInFlight,
  RingMismatch,
  NotAResult,
  OutputNotEmpty,
  TypeMismatch,
  BadGraphFile,
  ParseError,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ivm
