#pragma once

#include "rodshell/contact.hpp"
#include "rodshell/elastic.hpp"
#include "rodshell/external.hpp"
#include "rodshell/frames.hpp"

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace rodshell {

enum class Integrator { ImplicitEuler, NewmarkBeta, ImplicitMidpoint };
enum class SolverKind { Dense, Sparse };

const char* to_string(Integrator i);
const char* to_string(SolverKind s);
Integrator parse_integrator(const std::string& s);
SolverKind parse_solver(const std::string& s);

struct SimParams {
  double dt = 1e-2;
  double total_time = 1.0;
  double newton_tol = 0.0;      // <= 0 picks 1e-6 x total weight, floored at 1e-10
  double newton_rel_tol = 1e-10;  // also accept |f| below this times the force scale
  int max_newton_iters = 30;
  bool line_search = true;
  Integrator integrator = Integrator::ImplicitEuler;
  double newmark_beta = 0.25, newmark_gamma = 0.5;
  bool static_flag = false;
  int static_ramp_steps = 1;
  bool two_d = false;
  SolverKind solver = SolverKind::Sparse;
  bool pseudo_inverse = true;
  int max_dt_halvings = 0;  // 0 disables retrying a failed step with dt / 2
  int threads = 1;
};

struct RobotState {
  VecX q, u, a;
  FrameSet frames;
  double t = 0.0;
};

// Pinned and prescribed DOFs. A prescribed DOF follows base + amplitude * schedule(t).
class ConstraintSet {
 public:
  struct Prescription {
    double base = 0.0;
    double amplitude = 0.0;
    Schedule schedule;
    double value(double t) const { return base + amplitude * schedule(t); }
  };

  explicit ConstraintSet(const SoftRobot& robot) : robot_(&robot) {}

  void fix_dof(int dof, double value);
  void fix_nodes(const std::vector<int>& nodes, const VecX& q);
  void fix_edges(const std::vector<int>& edges, const VecX& q);  // twist angle of each edge
  void move_node(int node, const Vec3& displacement, const Schedule& schedule, const VecX& q);
  void twist_edge(int edge, double angle, const Schedule& schedule, const VecX& q);
  // Constrains every z and every theta.
  void apply_two_d(const VecX& q);
  // Drops any prescription on `dof` so it can be re-prescribed.
  void release(int dof) { fixed_.erase(dof); }

  bool is_fixed(int dof) const { return fixed_.count(dof) > 0; }
  const std::map<int, Prescription>& prescriptions() const { return fixed_; }
  void apply(VecX& q, double t) const;
  std::vector<int> free_dofs() const;

 private:
  void add(int dof, const Prescription& p);

  const SoftRobot* robot_;
  std::map<int, Prescription> fixed_;
};

struct StepDiagnostics {
  int step = 0;
  double t = 0.0;
  int newton_iters = 0;
  double residual = 0.0;
  int active_contacts = 0;
  int halvings = 0;
  ElasticEnergies elastic;
  double kinetic = 0.0;
  double potential = 0.0;
  double total_energy() const { return kinetic + potential + elastic.total(); }
};

using BeforeStepHook = std::function<void(SoftRobot&, ConstraintSet&, const RobotState&, double t_next)>;

struct LinearSolveInfo {
  bool used_pseudo_inverse = false;
};

// Solves J x = f over a square system assembled from triplets.
VecX linear_solve(int n, const TripletList& J, const VecX& f, SolverKind kind, bool pseudo_inverse = true,
                  LinearSolveInfo* info = nullptr);

class TimeStepper {
 public:
  TimeStepper(SoftRobot& robot, SimParams params, std::shared_ptr<const Environment> env,
              std::shared_ptr<ContactModel> contact = nullptr);

  const SimParams& params() const { return params_; }
  ConstraintSet& constraints() { return constraints_; }
  const RobotState& state() const { return state_; }
  void set_state(RobotState s) {
    state_ = std::move(s);
    accel_ready_ = true;
  }
  // Starts from positions q at rest; frames are the rest frames carried onto q.
  void set_initial_positions(const VecX& q);
  void set_before_step(BeforeStepHook hook) { before_step_ = std::move(hook); }
  double newton_tol() const { return tol_; }

  // Advances one step of params().dt. Throws StepFailure on non-convergence.
  StepDiagnostics step();

  // Runs to total_time; on_log fires at step 0 and every log_interval steps.
  using LogFn = std::function<void(const RobotState&, const StepDiagnostics&)>;
  void simulate(int log_interval, const LogFn& on_log);

  int steps_total() const;

  // Residual f(q) of the last converged step over all DOFs; the entries on
  // fixed DOFs are the reaction forces.
  const VecX& last_residual() const { return last_residual_; }

  // Diagnostics for the current state without stepping.
  StepDiagnostics diagnose() const;

  // Residual and its Jacobian (df/dq_{k+1}) for trial q, exposed for tests.
  struct Linearization {
    VecX f;
    TripletList J;
    int active_contacts = 0;
    double force_scale = 0.0;
  };
  Linearization linearize(const RobotState& prev, const VecX& x, double dt, double t_next, double load_scale,
                          bool jacobian) const;

 private:
  RobotState advance(const RobotState& prev, double dt, StepDiagnostics& d);
  RobotState solve_step(const RobotState& prev, double dt, double load_scale, const VecX& guess,
                        StepDiagnostics& d);
  RobotState commit(const RobotState& prev, const VecX& x, double dt) const;

  SoftRobot& robot_;
  SimParams params_;
  std::shared_ptr<const Environment> env_;
  std::shared_ptr<ContactModel> contact_;
  ConstraintSet constraints_;
  RobotState state_;
  BeforeStepHook before_step_;
  double tol_ = 1e-10;
  int step_index_ = 0;
  bool ramp_done_ = false;
  bool accel_ready_ = false;
  VecX last_residual_;
};

}  // namespace rodshell
