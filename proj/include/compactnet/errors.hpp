#pragma once

#include <stdexcept>
#include <string>

namespace compactnet {

/// Base class for every error raised by the library. `category()` is a short
/// machine-readable tag used by the CLI to pick an exit code and by tests.
class Error : public std::runtime_error {
 public:
  Error(std::string category, const std::string& what)
      : std::runtime_error(what), category_(std::move(category)) {}
  const std::string& category() const noexcept { return category_; }

 private:
  std::string category_;
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error("domain", what) {}
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what) : Error("shape", what) {}
};

class GeometryError : public Error {
 public:
  explicit GeometryError(const std::string& what) : Error("geometry", what) {}
};

class CapacityError : public Error {
 public:
  explicit CapacityError(const std::string& what) : Error("capacity", what) {}
};

/// Rank-deficient or otherwise ill-conditioned inputs to an analysis routine.
class ConditionError : public Error {
 public:
  explicit ConditionError(const std::string& what) : Error("condition", what) {}
};

class DegenerateError : public Error {
 public:
  explicit DegenerateError(const std::string& what) : Error("degenerate", what) {}
};

/// Non-finite values or divergence during an iterative solve. Carries the
/// iteration at which the problem was detected.
class NumericError : public Error {
 public:
  NumericError(const std::string& what, long iteration)
      : Error("numeric", what + " (iteration " + std::to_string(iteration) + ")"),
        iteration_(iteration) {}
  long iteration() const noexcept { return iteration_; }

 private:
  long iteration_;
};

class DivergenceError : public NumericError {
 public:
  DivergenceError(double loss, long iteration)
      : NumericError("loss diverged to " + std::to_string(loss), iteration) {}
};

}  // namespace compactnet
