#include "rodshell/simulation.hpp"

#include "rodshell/log.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <queue>

namespace rodshell {
namespace {

std::vector<double> rod_arclength(const SoftRobot& robot) {
  // Dijkstra over rod edges from node 0; nodes off the rod graph keep 0
  const int n = robot.n_nodes();
  std::vector<std::vector<std::pair<int, double>>> adj(n);
  for (const Edge& e : robot.edges) {
    if (e.kind != EdgeKind::Rod) continue;
    const double l = (robot.mesh.nodes[e.b] - robot.mesh.nodes[e.a]).norm();
    adj[e.a].emplace_back(e.b, l);
    adj[e.b].emplace_back(e.a, l);
  }
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  if (n > 0) {
    dist[0] = 0.0;
    pq.emplace(0.0, 0);
  }
  while (!pq.empty()) {
    auto [d, v] = pq.top();
    pq.pop();
    if (d > dist[v]) continue;
    for (auto [w, l] : adj[v])
      if (d + l < dist[w]) pq.emplace(dist[w] = d + l, w);
  }
  for (double& d : dist)
    if (std::isinf(d)) d = 0.0;
  return dist;
}

double ramp(double t, double duration) { return duration > 0.0 ? std::clamp(t / duration, 0.0, 1.0) : 1.0; }

std::vector<std::string> dof_names(const SoftRobot& robot) {
  std::vector<std::string> names(robot.ndof());
  for (int i = 0; i < robot.n_nodes(); ++i) {
    names[3 * i] = "x_" + std::to_string(i);
    names[3 * i + 1] = "y_" + std::to_string(i);
    names[3 * i + 2] = "z_" + std::to_string(i);
  }
  for (size_t e = 0; e < robot.edges.size(); ++e) {
    if (robot.dofs.twist_offset[e] >= 0) names[robot.dofs.twist_offset[e]] = "theta_" + std::to_string(e);
    if (robot.dofs.midedge_offset[e] >= 0) names[robot.dofs.midedge_offset[e]] = "xi_" + std::to_string(e);
  }
  return names;
}

std::string dof_unit(const std::string& name) { return name[0] == 't' || (name[0] == 'x' && name[1] == 'i') ? "rad" : "m"; }

void write_schema(const std::string& path, const SoftRobot& robot) {
  nlohmann::ordered_json j;
  j["format"] = "csv";
  j["delimiter"] = ",";
  j["version"] = 1;
  j["description"] = "one row per logged step: time, generalized coordinates q, velocities u";
  auto cols = nlohmann::ordered_json::array();
  cols.push_back({{"name", "t"}, {"unit", "s"}});
  const auto names = dof_names(robot);
  for (const auto& n : names) cols.push_back({{"name", "q_" + n}, {"unit", dof_unit(n)}});
  for (const auto& n : names) cols.push_back({{"name", "u_" + n}, {"unit", dof_unit(n) + "/s"}});
  j["columns"] = cols;
  std::ofstream(path) << j.dump(2) << "\n";
}

}  // namespace

BeforeStepHook actuation_hook(const SoftRobot& robot, const ActuationSpec& a, std::vector<double> arclength) {
  if (a.type.empty()) return nullptr;
  if (a.type == "traveling_wave") {
    std::vector<Vec2> base;
    for (const auto& s : robot.bend_twist_springs) base.push_back(s.nat_curvature);
    return [a, base, s_of = std::move(arclength)](SoftRobot& r, ConstraintSet&, const RobotState&, double t) {
      const double amp = a.amplitude * ramp(t, a.ramp_time);
      for (auto& s : r.bend_twist_springs) {
        const double arc = s_of[s.nodes[1]];
        s.nat_curvature = base[s.id];
        // springs store integrated curvature, the wave is per unit length
        s.nat_curvature[a.component - 1] +=
            amp * s.voronoi_length * std::sin(2.0 * std::numbers::pi * (arc / a.wavelength - a.frequency * t));
      }
    };
  }
  std::vector<double> base;
  for (const auto& h : robot.hinge_springs) base.push_back(h.nat_angle);
  return [a, base](SoftRobot& r, ConstraintSet&, const RobotState&, double t) {
    const double d = a.amplitude * ramp(t, a.ramp_time) * std::sin(2.0 * std::numbers::pi * a.frequency * t);
    for (size_t k = 0; k < r.hinge_springs.size(); ++k) r.hinge_springs[k].nat_angle = base[k] + d;
  };
}

ReferenceTrajectory record_reference(const ScenarioConfig& cfg, const ActuationSpec& actuation, double offset,
                                     double duration, double sample_interval) {
  ScenarioConfig open = cfg;
  open.controller = {};
  open.actuation = actuation;
  open.sim.total_time = offset + duration + open.sim.dt;  // one sample past the end
  Simulation sim(open);
  ReferenceTrajectory ref;
  const double dt = open.sim.dt;
  double next_sample = offset;
  auto record = [&](const RobotState& s) {
    if (s.t < next_sample - 1e-9 * dt) return;
    ref.times.push_back(s.t - offset);
    ref.strains.push_back(measure_control_strains(sim.robot(), s.q, s.frames));
    next_sample = sample_interval > 0.0 ? next_sample + sample_interval : s.t + 0.5 * dt;
  };
  RunOptions o;
  o.log_interval = 1;
  o.on_log = [&](const RobotState& s, const StepDiagnostics&, const ControlSample*) { record(s); };
  const RunSummary r = sim.run(o);
  if (!r.ok) throw ConfigError("reference simulation failed: " + r.error);
  ref.validate();
  return ref;
}

Simulation::Simulation(ScenarioConfig cfg) : cfg_(std::move(cfg)) {
  const MeshInput mesh = generate_mesh(cfg_.mesh);
  robot_ = std::make_unique<SoftRobot>(build_robot(mesh, cfg_.geometry, cfg_.material, cfg_.shell_model));
  env_ = std::make_shared<Environment>(*robot_, cfg_.environment);
  if (cfg_.contact.enabled || cfg_.ground.enabled) {
    if (!(cfg_.contact.k_c > 0.0)) throw ConfigError("contact.k_c: must be positive when contact is used");
    contact_ = std::make_shared<ContactModel>(*robot_, cfg_.contact, cfg_.ground);
  }
  stepper_ = std::make_unique<TimeStepper>(*robot_, cfg_.sim, env_, contact_);
  arclength_ = rod_arclength(*robot_);

  const VecX q = initial_positions(*robot_, cfg_.initial, cfg_.seed);
  if (!cfg_.initial.type.empty() || cfg_.initial.perturbation > 0.0) stepper_->set_initial_positions(q);

  const int n = robot_->n_nodes();
  auto check_node = [n](int i, const std::string& where) {
    if (i < 0 || i >= n) throw ConfigError(where + ": node " + std::to_string(i) + " does not exist");
  };
  auto check_edge = [this](int e, const std::string& where) {
    if (e < 0 || e >= static_cast<int>(robot_->edges.size()) || robot_->dofs.twist_offset[e] < 0)
      throw ConfigError(where + ": edge " + std::to_string(e) + " has no twist angle");
  };
  auto& cs = stepper_->constraints();
  const auto& spec = cfg_.constraints;
  for (int i : spec.fixed_nodes) check_node(i, "constraints.fixed_nodes");
  cs.fix_nodes(spec.fixed_nodes, q);
  for (int e : spec.fixed_edges) check_edge(e, "constraints.fixed_edges");
  cs.fix_edges(spec.fixed_edges, q);
  for (const auto& f : spec.fixed_axes) {
    check_node(f.node, "constraints.fixed_axes");
    for (char a : f.axes) {
      const int dof = 3 * f.node + (a - 'x');
      if (!cs.is_fixed(dof)) cs.fix_dof(dof, q[dof]);
    }
  }
  if (spec.fixed_within) {
    std::vector<int> inside;
    for (int i = 0; i < n; ++i)
      if ((q.segment<3>(3 * i) - spec.fixed_within->first).norm() <= spec.fixed_within->second) inside.push_back(i);
    if (inside.empty()) throw ConfigError("constraints.fixed_within: no node inside the region");
    for (int i : inside)
      for (int k = 0; k < 3; ++k)
        if (cs.is_fixed(3 * i + k)) cs.release(3 * i + k);
    cs.fix_nodes(inside, q);
  }
  for (const auto& m : spec.moves) {
    check_node(m.node, "constraints.moves");
    cs.move_node(m.node, m.displacement, m.schedule, q);
  }
  for (const auto& t : spec.twists) {
    check_edge(t.edge, "constraints.twists");
    cs.twist_edge(t.edge, t.angle, t.schedule, q);
  }
  if (cfg_.output.tip_node >= 0) check_node(cfg_.output.tip_node, "output.tip_node");
  if (cfg_.output.head_node >= 0) check_node(cfg_.output.head_node, "output.head_node");
  for (const auto& l : cfg_.environment.loads) check_node(l.node, "environment.point_loads");

  if (cfg_.controller.enabled) {
    const auto& r = cfg_.controller.reference;
    ReferenceTrajectory ref;
    if (r.type == "shape" || r.type == "shape_file") {
      std::vector<Vec3> target = r.type == "shape" ? s_curve_shape(robot_->mesh.nodes, r.amplitude)
                                                   : read_mesh_file(r.file).nodes;
      ref.times = {0.0};
      ref.strains = {reference_strain_from_shape(*robot_, target)};
      ref.shapes = {std::move(target)};
    } else if (r.type == "trajectory_file") {
      ref = read_reference_file(r.file, *robot_);
    } else {
      ref = record_reference(cfg_, r.actuation, r.offset, cfg_.sim.total_time, r.sample_interval);
    }
    reference_ = ref;
    controller_ = std::make_unique<PIController>(*robot_, cfg_.controller.pi, std::move(ref));
  }
  install_hooks();
}

Simulation::~Simulation() = default;

void Simulation::install_hooks() {
  BeforeStepHook act = actuation_hook(*robot_, cfg_.actuation, arclength_);
  BeforeStepHook ctl = controller_ ? controller_->hook(cfg_.sim.dt) : nullptr;
  if (act && ctl) {
    stepper_->set_before_step([act, ctl](SoftRobot& r, ConstraintSet& c, const RobotState& s, double t) {
      act(r, c, s, t);
      ctl(r, c, s, t);
    });
  } else if (act || ctl) {
    stepper_->set_before_step(act ? act : ctl);
  }
}

RunSummary Simulation::run(const RunOptions& opts) {
  RunSummary sum;
  const int interval = opts.log_interval > 0 ? opts.log_interval : cfg_.output.log_interval;
  const int steps = stepper_->steps_total();
  const SoftRobot& r = *robot_;
  const int tip = cfg_.output.tip_node >= 0 ? cfg_.output.tip_node : r.n_nodes() - 1;
  const int head = cfg_.output.head_node;
  const Vec3 tip0 = stepper_->state().q.segment<3>(3 * tip);

  std::ofstream traj, diag, tipf, headf, resf, ctlf;
  const bool files = !opts.out_dir.empty();
  if (files) {
    namespace fs = std::filesystem;
    fs::create_directories(opts.out_dir);
    auto open = [&](std::ofstream& f, const std::string& name) {
      f.open(fs::path(opts.out_dir) / name);
      if (!f) throw ConfigError("cannot write " + (fs::path(opts.out_dir) / name).string());
      f << std::setprecision(17);
    };
    std::ofstream(fs::path(opts.out_dir) / "resolved_config.json") << dump_config(cfg_);
    if (cfg_.output.trajectory) {
      open(traj, "trajectory.csv");
      write_schema((fs::path(opts.out_dir) / "trajectory.schema.json").string(), r);
      traj << "t";
      const auto names = dof_names(r);
      for (const auto& nm : names) traj << ",q_" << nm;
      for (const auto& nm : names) traj << ",u_" << nm;
      traj << "\n";
    }
    open(diag, "diagnostics.csv");
    diag << "step,t,newton_iters,residual,active_contacts,halvings,e_stretch,e_bend,e_twist,e_hinge,e_midedge,"
            "kinetic,potential,total\n";
    open(tipf, "tip_displacement.csv");
    tipf << "t,dx,dy,dz\n";
    if (head >= 0) {
      open(headf, "head_trajectory.csv");
      headf << "t,x,y,z\n";
    }
    open(resf, "residual.csv");
    resf << "step,t,newton_residual" << (controller_ ? ",strain_residual" : "") << "\n";
    if (controller_) {
      open(ctlf, "control.csv");
      ctlf << "t,strain_residual,nodal_rmse,max_increment\n";
    }
  }

  auto control_sample = [&](const RobotState& s) {
    ControlSample c;
    c.strain_residual = controller_->strain_residual(r, s);
    c.nodal_rmse = controller_->nodal_rmse(r, s);
    c.max_increment = controller_->last_max_increment();
    return c;
  };

  auto record = [&](const StepDiagnostics& d, bool log_frame) {
    const RobotState& s = stepper_->state();
    std::optional<ControlSample> cs;
    if (controller_) cs = control_sample(s);
    if (files) {
      diag << d.step << "," << d.t << "," << d.newton_iters << "," << d.residual << "," << d.active_contacts << ","
           << d.halvings << "," << d.elastic.stretch << "," << d.elastic.bend << "," << d.elastic.twist << ","
           << d.elastic.hinge << "," << d.elastic.midedge << "," << d.kinetic << "," << d.potential << ","
           << d.total_energy() << "\n";
      resf << d.step << "," << d.t << "," << d.residual;
      if (cs) resf << "," << cs->strain_residual;
      resf << "\n";
    }
    if (!log_frame) return;
    ++sum.frames;
    if (files) {
      if (traj.is_open()) {
        traj << s.t;
        for (int i = 0; i < s.q.size(); ++i) traj << "," << s.q[i];
        for (int i = 0; i < s.u.size(); ++i) traj << "," << s.u[i];
        traj << "\n";
      }
      const Vec3 dx = s.q.segment<3>(3 * tip) - tip0;
      tipf << s.t << "," << dx[0] << "," << dx[1] << "," << dx[2] << "\n";
      if (head >= 0) headf << s.t << "," << s.q[3 * head] << "," << s.q[3 * head + 1] << "," << s.q[3 * head + 2] << "\n";
      if (cs) {
        ctlf << s.t << "," << cs->strain_residual << ",";
        if (cs->nodal_rmse) ctlf << *cs->nodal_rmse;
        ctlf << "," << cs->max_increment << "\n";
      }
    }
    if (opts.on_log) opts.on_log(s, d, cs ? &*cs : nullptr);
  };

  record(stepper_->diagnose(), true);
  for (int k = 1; k <= steps; ++k) {
    StepDiagnostics d;
    try {
      d = stepper_->step();
    } catch (const Error& e) {
      sum.ok = false;
      sum.error = "step " + std::to_string(k) + " (t = " + std::to_string(stepper_->state().t + cfg_.sim.dt) +
                  "): " + e.what();
      break;
    }
    sum.steps = k;
    record(d, k % interval == 0);
  }
  for (auto* f : {&traj, &diag, &tipf, &headf, &resf, &ctlf})
    if (f->is_open()) f->flush();
  return sum;
}

}  // namespace rodshell
