#pragma once

#include "rodshell/scenario.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>

namespace rodshell {

struct ControlSample {
  double strain_residual = 0.0;
  std::optional<double> nodal_rmse;
  double max_increment = 0.0;
};

struct RunOptions {
  std::string out_dir;    // empty: no files
  int log_interval = 0;   // 0: take it from the config
  // Called at step 0 and every log interval.
  std::function<void(const RobotState&, const StepDiagnostics&, const ControlSample*)> on_log;
};

struct RunSummary {
  int steps = 0;   // completed steps
  int frames = 0;  // logged frames
  bool ok = true;
  std::string error;
};

// One configured simulation: mesh, robot, environment, contact, constraints,
// open-loop actuation and the optional controller.
class Simulation {
 public:
  explicit Simulation(ScenarioConfig cfg);
  ~Simulation();
  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  const ScenarioConfig& config() const { return cfg_; }
  SoftRobot& robot() { return *robot_; }
  TimeStepper& stepper() { return *stepper_; }
  PIController* controller() { return controller_.get(); }
  const ReferenceTrajectory* reference() const { return reference_ ? &*reference_ : nullptr; }

  // Steps to total_time. Step failures are reported in the summary and the
  // files written so far are flushed.
  RunSummary run(const RunOptions& opts = {});

  // Rest arclength of every node along the rod graph from node 0.
  const std::vector<double>& arclength() const { return arclength_; }

 private:
  void install_hooks();

  ScenarioConfig cfg_;
  std::unique_ptr<SoftRobot> robot_;
  std::shared_ptr<Environment> env_;
  std::shared_ptr<ContactModel> contact_;
  std::unique_ptr<TimeStepper> stepper_;
  std::unique_ptr<PIController> controller_;
  std::optional<ReferenceTrajectory> reference_;
  std::vector<double> arclength_;
};

// Open-loop hook that writes the actuation's natural strains at t_next.
BeforeStepHook actuation_hook(const SoftRobot& robot, const ActuationSpec& a, std::vector<double> arclength);

// Records the strain trajectory of an open-loop run of `cfg` (controller
// removed, actuation replaced), sampled from `offset` on and shifted so the
// sample at `offset` has t = 0.
ReferenceTrajectory record_reference(const ScenarioConfig& cfg, const ActuationSpec& actuation, double offset,
                                     double duration, double sample_interval);

}  // namespace rodshell
