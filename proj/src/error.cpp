#include "orchard/error.hpp"

namespace orchard {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "invalid argument";
    case ErrorKind::kNotFound: return "not found";
    case ErrorKind::kIo: return "i/o error";
    case ErrorKind::kFormat: return "format error";
    case ErrorKind::kTruncated: return "truncated data";
    case ErrorKind::kDimensionMismatch: return "dimension mismatch";
    case ErrorKind::kDegenerateInput: return "degenerate input";
    case ErrorKind::kVersionMismatch: return "version mismatch";
  }
  return "unknown error";
}

}  // namespace orchard
