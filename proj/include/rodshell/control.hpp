#pragma once

#include "rodshell/stepper.hpp"

#include <limits>
#include <optional>
#include <vector>

namespace rodshell {

// Strain fields the controller acts on: stretch per stretch spring, the two
// material curvatures per bend-twist spring.
struct StrainTargets {
  std::vector<double> stretch;
  std::vector<Vec2> bend;
};

StrainTargets measure_control_strains(const SoftRobot& robot, const VecX& q, const FrameSet& frames);

// Strains of a target shape with the robot's topology, through the same
// operators as the elastic energy. Throws TopologyError on a node-count mismatch.
StrainTargets reference_strain_from_shape(const SoftRobot& robot, const std::vector<Vec3>& target_nodes);

// Time-stamped reference, linearly interpolated. Shapes are optional and only
// used for the nodal RMSE.
struct ReferenceTrajectory {
  std::vector<double> times;
  std::vector<StrainTargets> strains;
  std::vector<std::vector<Vec3>> shapes;

  void validate() const;
  StrainTargets strain_at(double t) const;
  std::optional<std::vector<Vec3>> shape_at(double t) const;
  double end_time() const { return times.empty() ? 0.0 : times.back(); }
};

struct PIGains {
  double k_p = 0.0, k_i = 0.0;
  double rate_limit = std::numeric_limits<double>::infinity();      // per step
  double integral_clamp = std::numeric_limits<double>::infinity();  // |I| bound
};

struct PIControllerConfig {
  PIGains stretch, bend;
  bool control_stretch = false, control_bend = true;
  int smoothing_window = 1;  // odd
  int every = 1;             // update every n-th step

  void validate() const;
};

// Centered moving average over the index with the window shrinking
// symmetrically at both ends.
std::vector<double> smooth(const std::vector<double>& x, int window);

// One PI update for a scalar field. `integral` is updated in place.
std::vector<double> pi_update(const std::vector<double>& residual, std::vector<double>& integral, const PIGains& g,
                              int window, double dt);

class PIController {
 public:
  PIController(const SoftRobot& robot, PIControllerConfig config, ReferenceTrajectory reference);

  // Measures at `state`, compares with the reference at t_next and writes the
  // natural-strain increments into `robot`.
  void update(SoftRobot& robot, const RobotState& state, double t_next, double dt);

  // Residual norms at `state` against the reference at state.t.
  double strain_residual(const SoftRobot& robot, const RobotState& state) const;
  std::optional<double> nodal_rmse(const SoftRobot& robot, const RobotState& state) const;

  const std::vector<double>& integral_stretch() const { return i_stretch_; }
  const std::vector<double>& integral_bend() const { return i_bend_; }  // all kappa1, then all kappa2
  const PIControllerConfig& config() const { return cfg_; }
  double last_max_increment() const { return last_max_inc_; }

  BeforeStepHook hook(double dt);

 private:
  PIControllerConfig cfg_;
  ReferenceTrajectory ref_;
  std::vector<double> i_stretch_, i_bend_;
  long calls_ = 0;
  bool warned_ = false;
  double last_max_inc_ = 0.0;
};

}  // namespace rodshell
