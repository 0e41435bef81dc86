#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace axdram {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A DRAM coordinate is outside the geometry.
class AddressError : public Error {
  public:
    using Error::Error;
};

/// A numeric argument is outside its documented domain.
class ParameterError : public Error {
  public:
    using Error::Error;
};

/// Not enough (safe) DRAM words to hold the requested data.
class CapacityError : public Error {
  public:
    using Error::Error;
};

/// Two artifacts that must agree (plan vs. image, trace vs. records) do not.
class ConsistencyError : public Error {
  public:
    using Error::Error;
};

/// A configuration broke one or more rules; what() lists every violation.
class ValidationError : public ParameterError {
  public:
    explicit ValidationError(std::vector<std::string> violations);
    const std::vector<std::string>& violations() const noexcept { return violations_; }

  private:
    std::vector<std::string> violations_;
};

/// Supply voltage outside the characterized range.
class UnsupportedVoltageError : public Error {
  public:
    using Error::Error;
};

/// Reports from different workloads were compared.
class ComparisonError : public Error {
  public:
    using Error::Error;
};

/// File could not be read, written, or parsed.
class IoError : public Error {
  public:
    using Error::Error;
};

}  // namespace axdram
