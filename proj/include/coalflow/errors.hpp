#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace coalflow {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument violates an operation's precondition.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// A model hypothesis does not hold, e.g. a branching rate that is not
/// bounded below by a positive constant along a simulated path.
class ModelViolation : public Error {
 public:
  using Error::Error;
};

/// A numerical routine failed. Carries the matrix that triggered the failure
/// when there is one.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what, Eigen::MatrixXd offending = {})
      : Error(what), offending_(std::move(offending)) {}

  const Eigen::MatrixXd& offending() const { return offending_; }

 private:
  Eigen::MatrixXd offending_;
};

}  // namespace coalflow
