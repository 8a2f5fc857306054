#pragma once

#include <stdexcept>
#include <string>

namespace harnack {

/// Bad dimensions, negative parameters, malformed inputs.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Evaluation outside the domain where a formula is defined (e.g. past the
/// first zero of s0).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Numerical breakdown: step-size underflow, singular blocks, overflow.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Step-size underflow in the Riccati integrator. Carries the last time
/// reached with a valid state.
class StepUnderflow : public NumericalError {
 public:
  StepUnderflow(const std::string& what, double last_valid_time)
      : NumericalError(what), last_valid_time_(last_valid_time) {}
  double last_valid_time() const { return last_valid_time_; }

 private:
  double last_valid_time_;
};

/// Operation not available for the given input class (e.g. curvature of a
/// potential whose Hessian of h is not constant).
class Unsupported : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Transcribed control problem whose objective decreases without bound.
class UnboundedBelow : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Optimizer ran out of iterations. best_cost is the best objective found.
class NonConvergence : public std::runtime_error {
 public:
  NonConvergence(const std::string& what, double best_cost)
      : std::runtime_error(what), best_cost_(best_cost) {}
  double best_cost() const { return best_cost_; }

 private:
  double best_cost_;
};

}  // namespace harnack
