#pragma once

#include <stdexcept>
#include <string>

namespace scenesynth {

/// Root of every exception thrown by the library. Module-specific errors
/// derive from it so callers can catch either the precise kind or all of them.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised for unreadable/unwritable files and malformed binary formats.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace scenesynth
