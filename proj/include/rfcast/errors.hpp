#pragma once

#include <stdexcept>
#include <string>

namespace rfcast {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Grids or tensors whose shapes do not agree with an operation's contract.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Out-of-range or inconsistent parameters.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// File system failures (open, read, write).
class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed persisted data: bad magic, truncated payload, bad manifest line.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Numerical breakdown (NaN/Inf in a state or parameter).
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Text that does not follow the motion-description grammar.
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace rfcast
