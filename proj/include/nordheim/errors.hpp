#pragma once

#include <stdexcept>
#include <string>

namespace nordheim {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Malformed potential model (non-finite k, bad table, ...).
class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Corrupt or truncated kernel cache / data file.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// NaN/Inf during integration, or a root solve that did not converge.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what, double t = 0.0)
      : std::runtime_error(what), t_(t) {}
  double time() const noexcept { return t_; }

 private:
  double t_;
};

/// Allocation of a dense n^3 tensor that would not fit.
class SizingError : public std::runtime_error {
 public:
  SizingError(const std::string& what, std::size_t bytes)
      : std::runtime_error(what), bytes_(bytes) {}
  std::size_t required_bytes() const noexcept { return bytes_; }

 private:
  std::size_t bytes_;
};

}  // namespace nordheim
