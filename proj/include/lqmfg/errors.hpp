#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lqmfg {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class NotPositiveDefinite : public Error {
 public:
  using Error::Error;
};

class InvalidProblem : public Error {
 public:
  using Error::Error;
};

/// Parse failure in a problem config; `line()` is 1-based, 0 when unknown.
class ConfigError : public Error {
 public:
  ConfigError(int line, const std::string& message)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + message
                       : message),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

/// A state or matrix path left the finite range; `index()` is the first bad
/// grid node.
class NumericalBlowUp : public Error {
 public:
  NumericalBlowUp(std::size_t index, const std::string& message)
      : Error(message), index_(index) {}
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

/// The shooting boundary operator of the equilibrium system is numerically
/// singular: no unique solution exists at this horizon.
class SingularShootingMatrix : public Error {
 public:
  SingularShootingMatrix(double condition, const std::string& message)
      : Error(message), condition_(condition) {}
  double condition() const { return condition_; }

 private:
  double condition_;
};

/// The Radon boundary operator is singular at `time()`, so the nonsymmetric
/// Riccati solution does not exist on the whole horizon.
class BoundaryOperatorSingular : public Error {
 public:
  BoundaryOperatorSingular(double time, double condition,
                           const std::string& message)
      : Error(message), time_(time), condition_(condition) {}
  double time() const { return time_; }
  double condition() const { return condition_; }

 private:
  double time_;
  double condition_;
};

class NoConvergence : public Error {
 public:
  NoConvergence(int iterations, double ratio, const std::string& message)
      : Error(message), iterations_(iterations), ratio_(ratio) {}
  int iterations() const { return iterations_; }
  /// Last observed ratio of successive iterate differences.
  double contraction_ratio() const { return ratio_; }

 private:
  int iterations_;
  double ratio_;
};

class DistinctRootsViolated : public Error {
 public:
  using Error::Error;
};

}  // namespace lqmfg
