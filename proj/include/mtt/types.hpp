#pragma once

#include <Eigen/Dense>

#include <limits>
#include <stdexcept>
#include <string>

namespace mtt {

/// Target state (S_x, dS_x, S_y, dS_y).
using State = Eigen::Vector4d;
/// Observation: (range, bearing) or (x, y) depending on the sensor model.
using Obs = Eigen::Vector2d;
using Mat4 = Eigen::Matrix4d;
using Mat2 = Eigen::Matrix2d;
using Mat24 = Eigen::Matrix<double, 2, 4>;
using Mat42 = Eigen::Matrix<double, 4, 2>;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Inputs violate a documented invariant. The message names the first violation found.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A factorisation or linear solve failed even after regularisation.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Every particle weight vanished at some time step.
class DegeneracyError : public std::runtime_error {
 public:
  DegeneracyError(const std::string& what, int step)
      : std::runtime_error(what), step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

}  // namespace mtt
