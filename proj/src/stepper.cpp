#include "rodshell/stepper.hpp"

#include "rodshell/log.hpp"

#include <Eigen/LU>
#include <Eigen/QR>
#include <Eigen/SparseLU>

#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

namespace rodshell {

const char* to_string(Integrator i) {
  switch (i) {
    case Integrator::ImplicitEuler: return "implicit_euler";
    case Integrator::NewmarkBeta: return "newmark_beta";
    case Integrator::ImplicitMidpoint: return "implicit_midpoint";
  }
  return "?";
}

const char* to_string(SolverKind s) { return s == SolverKind::Dense ? "dense" : "sparse"; }

Integrator parse_integrator(const std::string& s) {
  for (Integrator i : {Integrator::ImplicitEuler, Integrator::NewmarkBeta, Integrator::ImplicitMidpoint})
    if (s == to_string(i)) return i;
  throw ConfigError("unknown integrator '" + s + "'");
}

SolverKind parse_solver(const std::string& s) {
  if (s == "dense") return SolverKind::Dense;
  if (s == "sparse") return SolverKind::Sparse;
  throw ConfigError("unknown solver '" + s + "'");
}

// ---------------------------------------------------------------- constraints

void ConstraintSet::add(int dof, const Prescription& p) {
  if (dof < 0 || dof >= robot_->ndof()) throw ConfigError("constraint on unknown DOF " + std::to_string(dof));
  auto it = fixed_.find(dof);
  if (it != fixed_.end()) {
    const Prescription& o = it->second;
    const bool same = o.base == p.base && o.amplitude == p.amplitude && o.schedule.shape == p.schedule.shape &&
                      o.schedule.duration == p.schedule.duration && o.schedule.frequency == p.schedule.frequency &&
                      o.schedule.phase == p.schedule.phase;
    if (!same) throw ConfigError("conflicting prescriptions on DOF " + std::to_string(dof));
    return;
  }
  fixed_.emplace(dof, p);
}

void ConstraintSet::fix_dof(int dof, double value) { add(dof, {value, 0.0, {}}); }

void ConstraintSet::fix_nodes(const std::vector<int>& nodes, const VecX& q) {
  for (int n : nodes) {
    if (n < 0 || n >= robot_->n_nodes()) throw ConfigError("fix_nodes: unknown node " + std::to_string(n));
    for (int d = 0; d < 3; ++d) fix_dof(3 * n + d, q[3 * n + d]);
  }
}

void ConstraintSet::fix_edges(const std::vector<int>& edges, const VecX& q) {
  for (int e : edges) {
    if (e < 0 || e >= static_cast<int>(robot_->edges.size()))
      throw ConfigError("fix_edges: unknown edge " + std::to_string(e));
    const int dof = robot_->dofs.twist_offset[e];
    if (dof < 0) throw ConfigError("fix_edges: edge " + std::to_string(e) + " has no twist DOF");
    fix_dof(dof, q[dof]);
  }
}

void ConstraintSet::move_node(int node, const Vec3& displacement, const Schedule& schedule, const VecX& q) {
  if (node < 0 || node >= robot_->n_nodes()) throw ConfigError("move_node: unknown node " + std::to_string(node));
  for (int d = 0; d < 3; ++d) add(3 * node + d, {q[3 * node + d], displacement[d], schedule});
}

void ConstraintSet::twist_edge(int edge, double angle, const Schedule& schedule, const VecX& q) {
  if (edge < 0 || edge >= static_cast<int>(robot_->edges.size()))
    throw ConfigError("twist_edge: unknown edge " + std::to_string(edge));
  const int dof = robot_->dofs.twist_offset[edge];
  if (dof < 0) throw ConfigError("twist_edge: edge " + std::to_string(edge) + " has no twist DOF");
  add(dof, {q[dof], angle, schedule});
}

void ConstraintSet::apply_two_d(const VecX& q) {
  for (int i = 0; i < robot_->n_nodes(); ++i) fix_dof(3 * i + 2, q[3 * i + 2]);
  for (int dof : robot_->dofs.twist_offset)
    if (dof >= 0) fix_dof(dof, q[dof]);
}

void ConstraintSet::apply(VecX& q, double t) const {
  for (const auto& [dof, p] : fixed_) q[dof] = p.value(t);
}

std::vector<int> ConstraintSet::free_dofs() const {
  std::vector<int> out;
  for (int i = 0; i < robot_->ndof(); ++i)
    if (!fixed_.count(i)) out.push_back(i);
  return out;
}

// --------------------------------------------------------------- linear solve

namespace {

VecX dense_pinv_solve(const MatX& A, const VecX& f) {
  Eigen::CompleteOrthogonalDecomposition<MatX> cod(A);
  return cod.solve(f);
}

}  // namespace

VecX linear_solve(int n, const TripletList& J, const VecX& f, SolverKind kind, bool pseudo_inverse,
                  LinearSolveInfo* info) {
  if (info) info->used_pseudo_inverse = false;
  if (n == 0) return VecX();
  if (kind == SolverKind::Dense) {
    MatX A = MatX::Zero(n, n);
    for (const auto& t : J) A(t.row(), t.col()) += t.value();
    Eigen::FullPivLU<MatX> lu(A);
    if (lu.isInvertible()) return lu.solve(f);
    if (!pseudo_inverse) {
      std::ostringstream msg;
      msg << "singular Jacobian: rank " << lu.rank() << " of " << n << ", max pivot " << lu.maxPivot();
      throw SolverError(msg.str());
    }
    if (info) info->used_pseudo_inverse = true;
    return dense_pinv_solve(A, f);
  }
  Eigen::SparseMatrix<double> A(n, n);
  A.setFromTriplets(J.begin(), J.end());
  A.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.analyzePattern(A);
  lu.factorize(A);
  if (lu.info() == Eigen::Success) {
    VecX x = lu.solve(f);
    // a near-singular factorization can succeed and still return garbage
    if (lu.info() == Eigen::Success && x.allFinite() && (A * x - f).norm() <= 1e-8 * f.norm()) return x;
  }
  if (!pseudo_inverse) throw SolverError("sparse factorization failed: " + lu.lastErrorMessage());
  if (info) info->used_pseudo_inverse = true;
  return dense_pinv_solve(MatX(A), f);
}

// ---------------------------------------------------------------- stepper

TimeStepper::TimeStepper(SoftRobot& robot, SimParams params, std::shared_ptr<const Environment> env,
                         std::shared_ptr<ContactModel> contact)
    : robot_(robot), params_(params), env_(std::move(env)), contact_(std::move(contact)), constraints_(robot) {
  if (!(params_.dt > 0.0)) throw ConfigError("dt must be positive");
  if (params_.total_time < 0.0) throw ConfigError("total_time must be non-negative");
  if (params_.max_newton_iters < 1) throw ConfigError("max_newton_iters must be at least 1");
  if (params_.static_ramp_steps < 1) throw ConfigError("static_ramp_steps must be at least 1");
  if (params_.max_dt_halvings < 0 || params_.max_dt_halvings > 4) throw ConfigError("max_dt_halvings must be in [0, 4]");
  if (!env_) env_ = std::make_shared<Environment>();
  state_.q = robot.q0;
  state_.u = VecX::Zero(robot.ndof());
  state_.a = VecX::Zero(robot.ndof());
  state_.frames = init_reference_frames(robot, robot.q0);
  if (params_.two_d) constraints_.apply_two_d(robot.q0);

  if (params_.newton_tol > 0.0) {
    tol_ = params_.newton_tol;
  } else {
    double weight = 0.0;
    if (env_->spec().gravity) weight = robot.total_mass() * env_->spec().g.norm();
    tol_ = std::max(1e-6 * weight, 1e-10);
  }
  last_residual_ = VecX::Zero(robot.ndof());
}

void TimeStepper::set_initial_positions(const VecX& q) {
  if (q.size() != robot_.ndof()) throw ConfigError("initial positions have the wrong size");
  state_.q = q;
  state_.u = VecX::Zero(robot_.ndof());
  state_.a = VecX::Zero(robot_.ndof());
  state_.frames = update_frames_after_step(robot_, init_reference_frames(robot_, robot_.q0), q);
  state_.t = 0.0;
  accel_ready_ = false;
}

int TimeStepper::steps_total() const {
  return static_cast<int>(std::floor(params_.total_time / params_.dt + 1e-9));
}

TimeStepper::Linearization TimeStepper::linearize(const RobotState& prev, const VecX& x, double dt, double t_next,
                                                  double load_scale, bool jacobian) const {
  const int n = robot_.ndof();
  const VecX& M = robot_.mass;
  const double beta = params_.newmark_beta, gamma = params_.newmark_gamma;
  VecX qe, v, inertia;
  double cm = 0.0, dq = 1.0, dv = 0.0;
  if (params_.static_flag) {
    qe = x;
    v = VecX::Zero(n);
    inertia = VecX::Zero(n);
  } else {
    switch (params_.integrator) {
      case Integrator::ImplicitEuler:
        qe = x;
        v = (x - prev.q) / dt;
        inertia = M.cwiseProduct(x - prev.q - dt * prev.u) / (dt * dt);
        cm = 1.0 / (dt * dt);
        dv = 1.0 / dt;
        break;
      case Integrator::NewmarkBeta: {
        const VecX a = (x - prev.q - dt * prev.u - dt * dt * (0.5 - beta) * prev.a) / (beta * dt * dt);
        qe = x;
        v = prev.u + dt * ((1.0 - gamma) * prev.a + gamma * a);
        inertia = M.cwiseProduct(a);
        cm = 1.0 / (beta * dt * dt);
        dv = gamma / (beta * dt);
        break;
      }
      case Integrator::ImplicitMidpoint:
        qe = 0.5 * (prev.q + x);
        v = (x - prev.q) / dt;
        inertia = M.cwiseProduct(2.0 * (x - prev.q) / dt - 2.0 * prev.u) / dt;
        cm = 2.0 / (dt * dt);
        dq = 0.5;
        dv = 1.0 / dt;
        break;
    }
  }

  ForceEval ev{qe, v, prev.q, t_next, dt, dq, dv, load_scale, params_.threads};
  ev.u_prev = &prev.u;
  EnergyContribution elastic = assemble_elastic(robot_, qe, prev.frames, true, params_.threads);
  EnergyContribution ext(n), con(n);
  env_->add(ev, ext);
  int active = 0;
  if (contact_) active = contact_->add(ev, con);

  Linearization L;
  L.f = inertia - elastic.force - ext.force - con.force;
  L.active_contacts = active;
  L.force_scale = std::max({inertia.cwiseAbs().maxCoeff(), elastic.force.cwiseAbs().maxCoeff(),
                            ext.force.cwiseAbs().maxCoeff(), con.force.cwiseAbs().maxCoeff()});
  if (jacobian) {
    L.J.reserve(elastic.jacobian.size() + ext.jacobian.size() + con.jacobian.size() + n);
    if (cm != 0.0)
      for (int i = 0; i < n; ++i) L.J.emplace_back(i, i, cm * M[i]);
    for (const auto& t : elastic.jacobian) L.J.emplace_back(t.row(), t.col(), -dq * t.value());
    for (const auto& t : ext.jacobian) L.J.emplace_back(t.row(), t.col(), -t.value());
    for (const auto& t : con.jacobian) L.J.emplace_back(t.row(), t.col(), -t.value());
  }
  return L;
}

RobotState TimeStepper::commit(const RobotState& prev, const VecX& x, double dt) const {
  RobotState s;
  s.q = x;
  s.t = prev.t + dt;
  if (params_.static_flag) {
    s.u = VecX::Zero(x.size());
    s.a = VecX::Zero(x.size());
  } else {
    switch (params_.integrator) {
      case Integrator::ImplicitEuler:
        s.u = (x - prev.q) / dt;
        s.a = (s.u - prev.u) / dt;
        break;
      case Integrator::NewmarkBeta: {
        const double beta = params_.newmark_beta, gamma = params_.newmark_gamma;
        s.a = (x - prev.q - dt * prev.u - dt * dt * (0.5 - beta) * prev.a) / (beta * dt * dt);
        s.u = prev.u + dt * ((1.0 - gamma) * prev.a + gamma * s.a);
        break;
      }
      case Integrator::ImplicitMidpoint:
        s.u = 2.0 * (x - prev.q) / dt - prev.u;
        s.a = (s.u - prev.u) / dt;
        break;
    }
  }
  s.frames = update_frames_after_step(robot_, prev.frames, x);
  return s;
}

RobotState TimeStepper::solve_step(const RobotState& prev, double dt, double load_scale, const VecX& guess,
                                   StepDiagnostics& d) {
  const double t_next = prev.t + dt;
  VecX x = guess;
  constraints_.apply(x, t_next);
  const std::vector<int> free = constraints_.free_dofs();
  const int nf = static_cast<int>(free.size());
  std::vector<int> slot(robot_.ndof(), -1);
  for (int i = 0; i < nf; ++i) slot[free[i]] = i;

  auto reduced = [&](const VecX& f) {
    VecX r(nf);
    for (int i = 0; i < nf; ++i) r[i] = f[free[i]];
    return r;
  };
  auto inf_norm = [](const VecX& r) { return r.size() ? r.cwiseAbs().maxCoeff() : 0.0; };

  double res = std::numeric_limits<double>::infinity();
  try {
    // the accepted line-search trial already carries its Jacobian
    Linearization L = linearize(prev, x, dt, t_next, load_scale, true);
    for (int it = 0;; ++it) {
      const VecX r = reduced(L.f);
      res = inf_norm(r);
      d.residual = res;
      d.active_contacts = L.active_contacts;
      if (!std::isfinite(res)) throw StepFailure("non-finite residual", res);
      if (res < tol_ || res <= params_.newton_rel_tol * L.force_scale) {
        last_residual_ = L.f;
        break;
      }
      if (it == params_.max_newton_iters) {
        std::ostringstream msg;
        msg << "Newton did not converge in " << it << " iterations, residual " << res;
        throw StepFailure(msg.str(), res);
      }
      TripletList J;
      J.reserve(L.J.size());
      for (const auto& t : L.J) {
        const int a = slot[t.row()], b = slot[t.col()];
        if (a >= 0 && b >= 0) J.emplace_back(a, b, t.value());
      }
      const VecX delta = linear_solve(nf, J, r, params_.solver, params_.pseudo_inverse);
      ++d.newton_iters;

      const double r2 = r.norm();
      double alpha = 1.0;
      for (int halving = 0;; ++halving) {
        VecX trial = x;
        for (int i = 0; i < nf; ++i) trial[free[i]] -= alpha * delta[i];
        std::optional<Linearization> next;
        try {
          next = linearize(prev, trial, dt, t_next, load_scale, true);
        } catch (const GeometryError&) {
        } catch (const KinkError&) {
        } catch (const ConditioningError&) {
        }
        const bool last = !params_.line_search || halving == 8;
        if (next && (last || reduced(next->f).norm() < r2)) {
          x = std::move(trial);
          L = std::move(*next);
          break;
        }
        if (last) {
          // full step failed to evaluate; re-raise from the plain evaluation
          x = std::move(trial);
          L = linearize(prev, x, dt, t_next, load_scale, true);
          break;
        }
        alpha *= 0.5;
      }
    }
  } catch (const StepFailure&) {
    throw;
  } catch (const GeometryError& e) {
    throw StepFailure(e.what(), res);
  } catch (const KinkError& e) {
    throw StepFailure(e.what(), res);
  } catch (const ConditioningError& e) {
    throw StepFailure(e.what(), res);
  } catch (const SolverError& e) {
    throw StepFailure(e.what(), res);
  }
  return commit(prev, x, dt);
}

RobotState TimeStepper::advance(const RobotState& prev, double dt, StepDiagnostics& d) {
  const VecX guess = params_.static_flag ? prev.q : VecX(prev.q + dt * prev.u);
  try {
    return solve_step(prev, dt, 1.0, guess, d);
  } catch (const StepFailure& e) {
    if (d.halvings >= params_.max_dt_halvings) throw;
    ++d.halvings;
    warn(std::string("step failed (") + e.what() + "), retrying with dt/2");
    const RobotState mid = advance(prev, 0.5 * dt, d);
    return advance(mid, 0.5 * dt, d);
  }
}

StepDiagnostics TimeStepper::step() {
  const double dt = params_.dt;
  const double t_next = state_.t + dt;
  for (auto& s : robot_.stretch_springs) s.nat_strain += s.inc_strain;
  for (auto& s : robot_.bend_twist_springs) {
    s.nat_curvature += s.inc_curvature;
    s.nat_twist += s.inc_twist;
  }
  if (before_step_) before_step_(robot_, constraints_, state_, t_next);

  if (contact_ && contact_->params().enabled) {
    double margin = contact_->params().margin;
    if (margin < 0.0) {
      double vmax = 0.0;
      for (int i = 0; i < robot_.n_nodes(); ++i) vmax = std::max(vmax, state_.u.segment<3>(3 * i).norm());
      margin = 2.0 * vmax * dt;
    }
    contact_->build_candidates(state_.q, margin);
  }

  if (!accel_ready_ && params_.integrator == Integrator::NewmarkBeta && !params_.static_flag) {
    // consistent initial acceleration M a_0 = F(q_0, u_0) on the free DOFs
    ForceEval ev{state_.q, state_.u, state_.q, state_.t, dt, 1.0, 0.0, 1.0, params_.threads};
    ev.u_prev = &state_.u;
    EnergyContribution F = assemble_elastic(robot_, state_.q, state_.frames, true, params_.threads);
    env_->add(ev, F);
    if (contact_) contact_->add(ev, F);
    state_.a = VecX::Zero(robot_.ndof());
    for (int i : constraints_.free_dofs()) state_.a[i] = F.force[i] / robot_.mass[i];
  }
  accel_ready_ = true;

  StepDiagnostics d;
  if (params_.static_flag && !ramp_done_ && params_.static_ramp_steps > 1) {
    RobotState s = state_;
    const int n = params_.static_ramp_steps;
    for (int k = 1; k <= n; ++k) {
      s = solve_step(s, dt, static_cast<double>(k) / n, s.q, d);
      if (k < n) s.t = state_.t;
    }
    state_ = s;
  } else {
    state_ = advance(state_, dt, d);
  }
  ramp_done_ = true;
  state_.t = t_next;
  ++step_index_;

  StepDiagnostics full = diagnose();
  full.newton_iters = d.newton_iters;
  full.residual = d.residual;
  full.active_contacts = d.active_contacts;
  full.halvings = d.halvings;
  return full;
}

StepDiagnostics TimeStepper::diagnose() const {
  StepDiagnostics d;
  d.step = step_index_;
  d.t = state_.t;
  assemble_elastic(robot_, state_.q, state_.frames, false, params_.threads, &d.elastic);
  d.kinetic = 0.5 * state_.u.dot(robot_.mass.cwiseProduct(state_.u));
  d.potential = env_->potential(state_.q);
  return d;
}

void TimeStepper::simulate(int log_interval, const LogFn& on_log) {
  if (log_interval < 1) throw ConfigError("log_interval must be at least 1");
  if (on_log) on_log(state_, diagnose());
  const int n = steps_total();
  for (int k = 1; k <= n; ++k) {
    StepDiagnostics d;
    try {
      d = step();
    } catch (const StepFailure& e) {
      std::ostringstream msg;
      msg << "step " << k << " (t = " << state_.t + params_.dt << "): " << e.what();
      throw StepFailure(msg.str(), e.residual());
    }
    if (on_log && k % log_interval == 0) on_log(state_, d);
  }
}

}  // namespace rodshell
