#pragma once

#include <stdexcept>
#include <string>

namespace lvr {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed vocabulary, merges, model or corpus input.
class ParseError : public Error {
 public:
  using Error::Error;
};

// A token prefix that the model cannot condition on: it is not a fixed point
// of encode(decode(.)) or it continues past EOS.
class InvalidPrefix : public Error {
 public:
  using Error::Error;
};

// A distribution lost all of its mass (masking, restriction or reduction).
class ZeroMassError : public Error {
 public:
  using Error::Error;
};

// Exhaustive enumeration would exceed the configured budget.
class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

}  // namespace lvr
