#pragma once

#include <stdexcept>
#include <string>

namespace orchard {

enum class ErrorKind {
  kInvalidArgument,   // bad caller input or configuration
  kNotFound,          // missing file
  kIo,                // read/write failure
  kFormat,            // malformed file contents
  kTruncated,         // file ended before the declared payload
  kDimensionMismatch,
  kDegenerateInput,   // e.g. constant image handed to Otsu
  kVersionMismatch,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace orchard
