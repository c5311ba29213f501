#pragma once

#include <stdexcept>
#include <string>

namespace csgen {

// Bad input data: unreadable files, malformed lines, vocabulary misuse.
struct DataError : std::runtime_error {
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Incompatible tensor shapes or out-of-range indices in the numeric core.
struct ShapeError : std::runtime_error {
  explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

// A non-finite value surfaced during computation; names the offending op.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace csgen
