#pragma once

#include <stdexcept>
#include <string>

namespace amrpbs {

/// Base class for every error raised by the library.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error
{
public:
  using Error::Error;
};

/// Kernel system could not be factorized even with the nugget applied.
class IllConditionedData : public Error
{
public:
  using Error::Error;
};

class UnsupportedOperation : public Error
{
public:
  using Error::Error;
};

/// Held-out errors collapsed to zero; the surrogate reproduces the data exactly.
class DegenerateErrorModel : public Error
{
public:
  using Error::Error;
};

/// The error regression does not decrease with sample count, so adding
/// samples cannot be sized from it.
class NonDecreasingError : public Error
{
public:
  using Error::Error;
};

class CannotSample : public Error
{
public:
  using Error::Error;
};

class EvaluatorFailure : public Error
{
public:
  using Error::Error;
};

/// Raised when a true evaluation would exceed the run budget. Indicates a bug.
class BudgetExceeded : public std::logic_error
{
public:
  using std::logic_error::logic_error;
};

class ConfigError : public Error
{
public:
  ConfigError(int line, const std::string& what)
    : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what)
    , line_(line)
  {}
  int line() const { return line_; }

private:
  int line_;
};

class IoError : public Error
{
public:
  using Error::Error;
};

} // namespace amrpbs
