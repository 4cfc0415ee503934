#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace netmoment {

// Base for everything the library throws on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite index or other argument outside a function's domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent input data (bad CSV, asymmetric pairs, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

// Degree sequence on the boundary of its achievable range: the moment
// equations have no finite solution.
class DegenerateDegreesError : public DataError {
 public:
  DegenerateDegreesError(const std::string& what, std::vector<std::size_t> nodes)
      : DataError(what), nodes_(std::move(nodes)) {}

  const std::vector<std::size_t>& nodes() const noexcept { return nodes_; }

 private:
  std::vector<std::size_t> nodes_;
};

// A matrix that must be inverted is singular (or numerically so).
class SingularMatrixError : public Error {
 public:
  using Error::Error;
};

// Iteration cap reached before the residual dropped below tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double last_residual)
      : Error(what), last_residual_(last_residual) {}

  double last_residual() const noexcept { return last_residual_; }

 private:
  double last_residual_;
};

}  // namespace netmoment
