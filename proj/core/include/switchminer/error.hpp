#pragma once

#include <stdexcept>
#include <string>

namespace switchminer {

/// Base class for every fatal condition raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input that cannot be used as given (bad config, unknown schema, ...).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace switchminer
