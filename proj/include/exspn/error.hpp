#pragma once

#include <stdexcept>
#include <string>

namespace exspn {

// Every failure raised by the library derives from Error so callers (and the
// C API boundary) can map it onto a status code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad user input: schema mismatch, unknown category, malformed arguments.
class InputError : public Error {
 public:
  using Error::Error;
};

// Malformed or truncated serialized documents.
class ParseError : public Error {
 public:
  using Error::Error;
};

// A structure that violates model invariants (completeness, decomposability,
// weights, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class NetworkError : public Error {
 public:
  using Error::Error;
};

class ChecksumError : public Error {
 public:
  using Error::Error;
};

// A caller broke an operation precondition (e.g. an instance function that
// does not cover the tree being labeled).
class ContractError : public Error {
 public:
  using Error::Error;
};

}  // namespace exspn
