#pragma once

#include <stdexcept>
#include <string>

namespace iclv {

// Input that violates the dataset schema or a model-spec contract.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed model-spec or parameter file; carries the line when known.
class SpecError : public std::runtime_error {
 public:
  explicit SpecError(const std::string& what, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

// Numerical precondition failures (empty availability, degenerate matrices, ...).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace iclv
