#pragma once

#include <stdexcept>
#include <string>

namespace cpalab {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// An operand or index lies outside its permitted range.
class RangeError : public Error {
  public:
    using Error::Error;
};

/// A distribution, fit or command parameter is invalid.
class ParameterError : public Error {
  public:
    using Error::Error;
};

/// Matrix, file or metadata dimensions disagree.
class DimensionError : public Error {
  public:
    using Error::Error;
};

/// Bad magic, unsupported version or malformed content in a trace file.
class FormatError : public Error {
  public:
    using Error::Error;
};

/// A trace file ends before the data its header announces.
class TruncationError : public Error {
  public:
    using Error::Error;
};

/// A hypothesis space exceeds the configured enumeration cap.
class CapacityError : public Error {
  public:
    using Error::Error;
};

/// Imported traces lack what a correlation attack needs (the known inputs).
class UnusableForCpaError : public Error {
  public:
    using Error::Error;
};

/// The decay fit cannot identify its parameters from the given points.
class FitDegenerateError : public Error {
  public:
    using Error::Error;
};

/// Configuration validation failure; the message lists every offending field.
class ValidationError : public Error {
  public:
    using Error::Error;
};

/// CSV parse failure; carries the 1-based line number.
class ParseError : public Error {
  public:
    ParseError(std::size_t line, const std::string &what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const { return line_; }

  private:
    std::size_t line_;
};

} // namespace cpalab
