#pragma once

#include <stdexcept>
#include <string>

namespace painreg {

// Bad input data: malformed files, duplicate keys, out-of-range labels.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside its contract (bad dimensions, invalid config values).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Vector/matrix dimension mismatch.
class ShapeError : public DomainError {
 public:
  using DomainError::DomainError;
};

// Non-finite loss during training; carries the iteration it was detected at.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, long iteration)
      : std::runtime_error(what), iteration_(iteration) {}
  long iteration() const { return iteration_; }

 private:
  long iteration_;
};

}  // namespace painreg
