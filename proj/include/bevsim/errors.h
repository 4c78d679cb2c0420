#pragma once

#include <stdexcept>
#include <string>

namespace bevsim {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A value type was constructed in violation of its invariants.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace bevsim
