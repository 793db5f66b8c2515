#pragma once

#include <stdexcept>
#include <string>

namespace gpcmc {

/// Rejected inputs: bad dimensions, invalid hyperparameters, non-finite data.
class InvalidInputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A conditional variance collapsed below the clamp floor, or an SPD solve
/// hit a singular matrix. Carries the 1-based recursion step where it happened
/// (0 when no step applies).
class DegenerateCovarianceError : public std::runtime_error {
 public:
  DegenerateCovarianceError(const std::string& what, int step = 0)
      : std::runtime_error(what), step_(step) {}
  int step() const noexcept { return step_; }

 private:
  int step_;
};

/// Resampling was asked to replenish from an empty accepted set.
class EmptyEnsembleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller broke an API contract (e.g. predicting with a covariance bundle
/// built against a different training ordering or kernel).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Model fitting failed. Carries the 1-based training dimension at which the
/// ensemble died; the usual remedy is a larger sample count M.
class FitError : public std::runtime_error {
 public:
  FitError(const std::string& what, int dim) : std::runtime_error(what), dim_(dim) {}
  int dim() const noexcept { return dim_; }

 private:
  int dim_;
};

/// Every hyperparameter in a tuning grid failed to fit.
class TunerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gpcmc
