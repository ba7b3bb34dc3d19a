#pragma once

#include <stdexcept>
#include <string>

namespace kdiffnet {

// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed data: wrong shapes, non-finite entries, negative distances.
class InputError : public Error {
 public:
  using Error::Error;
};

// Out-of-range hyperparameter (negative v, non-positive gamma, rho outside (0,2), ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Knowledge structures that violate their invariants (overlapping node groups,
// non-positive weights, asymmetric weights).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A matrix that is singular or too ill-conditioned to invert.  The condition
// estimate is carried so callers can decide to raise v.
class InvertibilityError : public Error {
 public:
  InvertibilityError(const std::string& what, double condition_estimate)
      : Error(what), condition_estimate_(condition_estimate) {}

  double condition_estimate() const noexcept { return condition_estimate_; }

 private:
  double condition_estimate_;
};

// No value in a v grid produced two invertible thresholded covariances.
class SelectionError : public Error {
 public:
  using Error::Error;
};

// Infeasible simulation spec (groups exceeding p, sparsity outside (0,1), ...).
class SpecError : public Error {
 public:
  SpecError(const std::string& field, const std::string& what)
      : Error(field + ": " + what), field_(field) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// File system and format problems.
class IoError : public Error {
 public:
  using Error::Error;
};

// An estimator was asked to run without the knowledge it needs.
class MissingKnowledgeError : public Error {
 public:
  using Error::Error;
};

}  // namespace kdiffnet
