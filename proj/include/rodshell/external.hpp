#pragma once

#include "rodshell/forces.hpp"
#include "rodshell/mesh.hpp"

#include <memory>
#include <string>
#include <vector>

namespace rodshell {

// Scalar time profile for prescribed loads and motions.
struct Schedule {
  enum class Shape { Constant, Ramp, Sine };
  Shape shape = Shape::Constant;
  double duration = 1.0;   // ramp: time to reach full amplitude
  double frequency = 0.0;  // sine, Hz
  double phase = 0.0;      // sine, rad

  double operator()(double t) const;
};

struct PointLoad {
  int node = -1;
  Vec3 vector = Vec3::Zero();  // N, at full amplitude
  Schedule schedule;
};

struct RftParams {
  double c_t = 0.0, c_n = 0.0;  // N s / m^2
  bool tangent_terms = false;   // include d t / d q in the Jacobian
};

struct EnvironmentSpec {
  Vec3 g = Vec3(0.0, 0.0, -9.81);
  bool gravity = true;
  bool buoyancy = false;
  double fluid_density = 0.0;
  double damping = 0.0;  // eta, 1/s
  bool rft = false;
  RftParams rft_params;
  std::vector<PointLoad> loads;
  double k_thrust = 0.0;  // experimental, N s / m^3
};

// Force contract: add F (and dF/dq_{k+1} through ev.dq / ev.dv) into `out`.
// Potential terms also add their energy.
class ExternalForce {
 public:
  virtual ~ExternalForce() = default;
  virtual std::string name() const = 0;
  virtual void add(const ForceEval& ev, EnergyContribution& out) const = 0;
};

class Gravity : public ExternalForce {
 public:
  Gravity(const SoftRobot& robot, const Vec3& g) : robot_(robot), g_(g) {}
  std::string name() const override { return "gravity"; }
  void add(const ForceEval& ev, EnergyContribution& out) const override;

 private:
  const SoftRobot& robot_;
  Vec3 g_;
};

// -rho_f V_i g with the lumped volume of each node.
class Buoyancy : public ExternalForce {
 public:
  Buoyancy(const SoftRobot& robot, const Vec3& g, double fluid_density);
  std::string name() const override { return "buoyancy"; }
  void add(const ForceEval& ev, EnergyContribution& out) const override;
  const VecX& volumes() const { return volume_; }

 private:
  Vec3 g_;
  double rho_;
  VecX volume_;
};

// Mass-proportional damping F = -eta M v.
class ViscousDamping : public ExternalForce {
 public:
  ViscousDamping(const SoftRobot& robot, double eta) : robot_(robot), eta_(eta) {}
  std::string name() const override { return "damping"; }
  void add(const ForceEval& ev, EnergyContribution& out) const override;

 private:
  const SoftRobot& robot_;
  double eta_;
};

// Anisotropic drag on rod edges, rest-length weighted, split evenly to the
// two endpoints.
class RftDrag : public ExternalForce {
 public:
  RftDrag(const SoftRobot& robot, RftParams params) : robot_(robot), p_(params) {}
  std::string name() const override { return "rft"; }
  void add(const ForceEval& ev, EnergyContribution& out) const override;

 private:
  const SoftRobot& robot_;
  RftParams p_;
};

class PointForces : public ExternalForce {
 public:
  PointForces(const SoftRobot& robot, std::vector<PointLoad> loads);
  std::string name() const override { return "point_loads"; }
  void add(const ForceEval& ev, EnergyContribution& out) const override;

 private:
  std::vector<PointLoad> loads_;
};

// Upward thrust k (-dV/dt)^+ from the enclosed volume of the shell, evaluated
// explicitly at the committed state and spread by nodal mass.
class Thrust : public ExternalForce {
 public:
  Thrust(const SoftRobot& robot, double k_thrust) : robot_(robot), k_(k_thrust) {}
  std::string name() const override { return "thrust"; }
  void add(const ForceEval& ev, EnergyContribution& out) const override;

 private:
  const SoftRobot& robot_;
  double k_;
};

// Signed volume 1/6 sum x0 . (x1 x x2) over the triangles and its gradient.
double enclosed_volume(const SoftRobot& robot, const VecX& q, VecX* grad = nullptr);

class Environment {
 public:
  Environment() = default;
  Environment(const SoftRobot& robot, const EnvironmentSpec& spec);

  void add(const ForceEval& ev, EnergyContribution& out) const;
  const std::vector<std::unique_ptr<ExternalForce>>& terms() const { return terms_; }
  const EnvironmentSpec& spec() const { return spec_; }

  // Potential energy of the conservative terms at q.
  double potential(const VecX& q) const;

 private:
  EnvironmentSpec spec_;
  std::vector<std::unique_ptr<ExternalForce>> terms_;
};

}  // namespace rodshell
