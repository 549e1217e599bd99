#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace mienkf {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Ensemble storage: one particle per row, so every state vector is contiguous.
using ParticleMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Bad arguments: wrong sizes, out-of-range parameters, violated preconditions.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A state vector that is not finite was handed to a model operation.
class InvalidStateError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A linear solve could not be carried out (e.g. singular innovation covariance).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The requested operation needs a model the implementation does not cover.
class UnsupportedModelError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Missing or inconsistent experiment configuration.
class ConfigurationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Where a trajectory blew up. Fields that are unknown at the throw site stay at -1
/// and are filled in as the error travels up through the estimators.
struct DivergenceSite {
  long step = -1;
  long particle = -1;
  std::string member;
  int level1 = -1;
  int level2 = -1;
  long sample = -1;
  long time = -1;
};

class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(DivergenceSite site);
  const DivergenceSite& site() const noexcept { return site_; }

 private:
  DivergenceSite site_;
};

}  // namespace mienkf
