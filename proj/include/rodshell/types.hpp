#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/SparseCore>

#include <stdexcept>
#include <string>
#include <vector>

namespace rodshell {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;
using Triplet = Eigen::Triplet<double>;
using TripletList = std::vector<Triplet>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TopologyError : public Error { using Error::Error; };
class GeometryError : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };
class KinkError : public Error { using Error::Error; };
class ConditioningError : public Error { using Error::Error; };
class SolverError : public Error { using Error::Error; };

class StepFailure : public Error {
 public:
  StepFailure(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

// Energy, force (= -dE/dq) and force Jacobian (= dF/dq = -d2E/dq2) over the
// full DOF vector.
struct EnergyContribution {
  double energy = 0.0;
  VecX force;
  TripletList jacobian;

  explicit EnergyContribution(int ndof = 0) : force(VecX::Zero(ndof)) {}

  void add(const EnergyContribution& other) {
    energy += other.energy;
    force += other.force;
    jacobian.insert(jacobian.end(), other.jacobian.begin(), other.jacobian.end());
  }
};

}  // namespace rodshell
