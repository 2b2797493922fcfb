#pragma once

#include <stdexcept>
#include <string>

namespace kubo {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Mismatched or malformed dimensions.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A function was asked for a value outside its domain (e.g. f(λ) not finite).
class DomainError : public Error {
 public:
  using Error::Error;
};

// A parameter outside its admissible range (negative scale, α ∉ [0,1], ...).
class RangeError : public Error {
 public:
  using Error::Error;
};

// Input failed the tolerance-qualified positive semidefiniteness check.
class PsdError : public Error {
 public:
  using Error::Error;
};

// Inversion impossible even after the ε-regularization schedule.
class SingularityError : public Error {
 public:
  using Error::Error;
};

// Bad user input at the API or CLI level (unknown ids, malformed text).
class UsageError : public Error {
 public:
  using Error::Error;
};

class EigenError : public Error {
 public:
  EigenError(const std::string& what, int dim, double condition_estimate)
      : Error(what), dim_(dim), condition_estimate_(condition_estimate) {}
  int dim() const { return dim_; }
  double condition_estimate() const { return condition_estimate_; }

 private:
  int dim_;
  double condition_estimate_;
};

// Integration budget exhausted before the requested tolerance was met.
class QuadratureError : public Error {
 public:
  QuadratureError(const std::string& what, double best_estimate, double achieved_error)
      : Error(what), best_estimate_(best_estimate), achieved_error_(achieved_error) {}
  double best_estimate() const { return best_estimate_; }
  double achieved_error() const { return achieved_error_; }

 private:
  double best_estimate_;
  double achieved_error_;
};

}  // namespace kubo
