// Acceptance checks. Prints one PASS/FAIL line per criterion; pass criterion
// numbers as arguments to run a subset.

#include "builders.hpp"
#include "contact_cases.hpp"
#include "fd.hpp"
#include "oracles.hpp"
#include "rodshell/log.hpp"
#include "rodshell/simulation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <string>

using namespace rodshell;
using namespace testing_util;

namespace {

constexpr double pi = std::numbers::pi;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

MatX dense(const TripletList& t, int n) {
  MatX m = MatX::Zero(n, n);
  for (const auto& e : t) m(e.row(), e.col()) += e.value();
  return m;
}

// Runs a scenario in memory; frames every `interval` steps.
struct Trace {
  std::vector<double> t;
  std::vector<VecX> q;
  std::vector<StepDiagnostics> diag;
  std::vector<ControlSample> control;
  RunSummary summary;
  VecX q0;
  int nodes = 0;
  double mass = 0.0;
};

Trace run(const ScenarioConfig& cfg, int interval) {
  Simulation sim(cfg);
  Trace tr;
  tr.q0 = sim.robot().q0;
  tr.nodes = sim.robot().n_nodes();
  for (int i = 0; i < sim.robot().n_nodes(); ++i) tr.mass += sim.robot().mass[3 * i];
  RunOptions opts;
  opts.log_interval = interval;
  opts.on_log = [&](const RobotState& s, const StepDiagnostics& d, const ControlSample* c) {
    tr.t.push_back(s.t);
    tr.q.push_back(s.q);
    tr.diag.push_back(d);
    if (c) tr.control.push_back(*c);
  };
  tr.summary = sim.run(opts);
  return tr;
}

int steps_of(const ScenarioConfig& c) { return static_cast<int>(std::llround(c.sim.total_time / c.sim.dt)); }

Vec3 node(const VecX& q, int i) { return q.segment<3>(3 * i); }

// ------------------------------------------------------------------ 1

Verdict cantilever() {
  const ScenarioConfig cfg = bundled_scenario("cantilever_1e7");
  const Trace tr = run(cfg, steps_of(cfg));
  if (!tr.summary.ok) return {false, tr.summary.error};
  const int tip = tr.nodes - 1;
  const double r = cfg.geometry.rod_radius, E = cfg.material.rod.youngs_modulus;
  const double L = (node(tr.q0, tip) - node(tr.q0, 0)).norm();
  const double w = cfg.material.rod.density * pi * r * r * 9.81;
  const double I = pi * std::pow(r, 4) / 4.0;
  const double analytic = w * std::pow(L, 4) / (8.0 * E * I);
  const double sim = -(tr.q.back()[3 * tip + 2] - tr.q0[3 * tip + 2]);
  const double err = std::abs(sim - analytic) / analytic;
  const double ke = tr.diag.back().kinetic;
  return {err < 0.05 && ke < 1e-9,
          fmt("tip %.5e m, beam theory %.5e m, error %.2f%%, final KE %.1e J", sim, analytic, 100 * err, ke)};
}

// ------------------------------------------------------------------ 2

MeshInput rod_shell_joint() {
  MeshInput m = plate(2, 2, 0.2, 0.2);
  const int base = static_cast<int>(m.nodes.size());
  m.nodes.emplace_back(0.2, 0.3, 0.05);
  m.nodes.emplace_back(0.25, 0.4, 0.1);
  m.rod_edges = {{8, base}, {base, base + 1}};
  return m;
}

VecX random_state(const SoftRobot& r, fd::Rng& rng, double scale) {
  VecX q = r.q0;
  for (int i = 0; i < r.n_nodes(); ++i) q.segment<3>(3 * i) += scale * rng.vec3();
  for (int v : r.dofs.twist_offset)
    if (v >= 0) q[v] = rng.uniform(-0.5, 0.5);
  for (int v : r.dofs.midedge_offset)
    if (v >= 0) q[v] = rng.uniform(-0.1, 0.1);
  return q;
}

struct Worst {
  double force = 0.0, jac = 0.0;
  void add(double f, double j) {
    force = std::max(force, f);
    jac = std::max(jac, j);
  }
};

Verdict gradients() {
  std::ostringstream out;
  bool ok = true;
  auto judge = [&](const std::string& name, const Worst& w, bool has_energy) {
    const bool pass = (!has_energy || w.force < 1e-6) && w.jac < 2e-4;
    ok = ok && pass;
    out << " " << name << " [";
    if (has_energy) out << fmt("F %.1e, ", w.force);
    out << fmt("J %.1e]", w.jac);
  };

  struct ElasticCase {
    const char* name;
    MeshInput mesh;
    ShellModel model;
  };
  const std::vector<ElasticCase> elastic = {{"rod", straight_chain(5, 0.4), ShellModel::Hinge},
                                            {"hinge", two_triangles(), ShellModel::Hinge},
                                            {"midedge", plate(2, 2, 1.0, 1.0), ShellModel::MidEdge},
                                            {"joint+hinge", rod_shell_joint(), ShellModel::Hinge},
                                            {"joint+midedge", rod_shell_joint(), ShellModel::MidEdge}};
  fd::Rng rng(2001);
  for (const auto& c : elastic) {
    Worst w;
    for (int trial = 0; trial < 100; ++trial) {
      MeshInput m = c.mesh;
      for (auto& x : m.nodes) x += 0.02 * rng.vec3();
      const SoftRobot r = build_robot(m, geometry(0.01, 0.01), material(1e5, 0.3), c.model);
      const FrameSet f = init_reference_frames(r, r.q0);
      const VecX q = random_state(r, rng, 0.02);
      const VecX h = VecX::Constant(q.size(), 1e-6);
      const EnergyContribution ec = assemble_elastic(r, q, f);
      const VecX g = fd::gradient([&](const VecX& x) { return assemble_elastic(r, x, f, false).energy; }, q, h);
      const MatX Jfd = fd::jacobian([&](const VecX& x) { return VecX(assemble_elastic(r, x, f).force); }, q, h);
      w.add(fd::rel_error(-ec.force, g, 1e-12), fd::rel_error(dense(ec.jacobian, r.ndof()), Jfd, 1e-10));
    }
    judge(c.name, w, true);
  }

  ContactParams cp;
  cp.enabled = true;
  cp.nu_slip = 0.05;
  cp.k_c = 1e3;
  cp.friction = true;
  for (ContactType type : {ContactType::PP, ContactType::PE, ContactType::EE, ContactType::PT}) {
    Worst w;
    for (int trial = 0; trial < 100; ++trial) {
      const auto c = contact_cases::random_case(rng, type);
      cp.delta = 0.3 * c.cls.distance;
      cp.mu = rng.uniform(0.1, 1.0);
      const ContactPair pair = contact_cases::pair_for(c, c.cls.distance * rng.uniform(0.8, 1.2));
      const VecX q = contact_cases::stack(c.x);
      VecX q_prev = q;
      for (int k = 0; k < 12; ++k) q_prev[k] -= 0.02 * rng.uniform();
      const double dt = 0.1;
      auto eval = [&](const VecX& x, bool friction) {
        const VecX v = (x - q_prev) / dt;
        return pair_contact(pair, cp, {x, v, q_prev, 0.0, dt, 1.0, 1.0 / dt}, 12, friction);
      };
      const VecX h = VecX::Constant(12, 1e-7);
      const VecX g = fd::gradient([&](const VecX& x) { return eval(x, false).energy; }, q, h);
      const MatX Jfd = fd::jacobian([&](const VecX& x) { return VecX(eval(x, true).force); }, q, h);
      w.add(fd::rel_error(-eval(q, false).force, g, 1e-14), fd::rel_error(dense(eval(q, true).jacobian, 12), Jfd, 1e-12));
    }
    judge(std::string("contact ") + to_string(type), w, true);
  }

  {
    Worst w;
    for (int trial = 0; trial < 100; ++trial) {
      const SoftRobot r = build_robot(straight_chain(4, 1.0), geometry(0.01), material(), ShellModel::Hinge);
      ContactParams p = cp;
      p.delta = 1e-3;
      GroundParams gp;
      gp.enabled = true;
      gp.mu = rng.uniform(0.1, 1.0);
      VecX q_prev = r.q0;
      for (int i = 0; i < r.n_nodes(); ++i) q_prev[3 * i + 2] = rng.uniform(0.008, 0.012);
      VecX q = q_prev;
      for (int i = 0; i < r.n_nodes(); ++i) q.segment<3>(3 * i) += Vec3(0.05 * rng.uniform(), 0.05 * rng.uniform(), 0.0005 * rng.uniform());
      const double dt = 0.1;
      auto eval = [&](const VecX& x, bool friction) {
        const VecX v = (x - q_prev) / dt;
        GroundParams g2 = gp;
        if (!friction) g2.mu = 0.0;
        const ContactModel m2(r, p, g2);
        EnergyContribution o(r.ndof());
        m2.add({x, v, q_prev, 0.0, dt, 1.0, 1.0 / dt}, o);
        return o;
      };
      const VecX h = VecX::Constant(r.ndof(), 1e-8);
      const VecX g = fd::gradient([&](const VecX& x) { return eval(x, false).energy; }, q, h);
      const MatX Jfd = fd::jacobian([&](const VecX& x) { return VecX(eval(x, true).force); }, q, h);
      w.add(fd::rel_error(-eval(q, false).force, g, 1e-14),
            fd::rel_error(dense(eval(q, true).jacobian, r.ndof()), Jfd, 1e-12));
    }
    judge("ground", w, true);
  }

  auto wavy_rod = [&]() {
    MeshInput m = straight_chain(6, 0.5);
    for (auto& x : m.nodes) x += 0.02 * rng.vec3();
    return build_robot(m, geometry(0.01), material(), ShellModel::Hinge);
  };
  {
    Worst w;
    for (int trial = 0; trial < 100; ++trial) {
      const SoftRobot r = wavy_rod();
      const int n = r.ndof();
      const VecX q = random_state(r, rng, 0.02);
      const Vec3 gvec = rng.vec3();
      const Gravity grav(r, gvec);
      const Buoyancy buoy(r, gvec, rng.uniform(100, 2000));
      for (const ExternalForce* f : {static_cast<const ExternalForce*>(&grav), static_cast<const ExternalForce*>(&buoy)}) {
        auto eval = [&](const VecX& x) {
          EnergyContribution o(n);
          f->add({x, VecX::Zero(n), x}, o);
          return o;
        };
        const VecX g = fd::gradient([&](const VecX& x) { return eval(x).energy; }, q, VecX::Constant(n, 1e-6));
        w.add(fd::rel_error(-eval(q).force, g, 1e-12), 0.0);
      }
    }
    judge("gravity+buoyancy", w, true);
  }
  {
    Worst w;
    for (int trial = 0; trial < 100; ++trial) {
      const SoftRobot r = wavy_rod();
      const int n = r.ndof();
      const VecX q_prev = r.q0 + 1e-2 * VecX::Random(n);
      const VecX q = q_prev + 1e-2 * VecX::Random(n);
      const double dt = 0.05;
      const RftDrag rft(r, {rng.uniform(0.1, 1.0), rng.uniform(0.1, 3.0), true});
      const ViscousDamping damp(r, rng.uniform(0.1, 3.0));
      for (const ExternalForce* f : {static_cast<const ExternalForce*>(&rft), static_cast<const ExternalForce*>(&damp)}) {
        auto eval = [&](const VecX& x) {
          const VecX v = (x - q_prev) / dt;
          EnergyContribution o(n);
          f->add({x, v, q_prev, 0.0, dt, 1.0, 1.0 / dt}, o);
          return o;
        };
        const MatX Jfd = fd::jacobian([&](const VecX& x) { return VecX(eval(x).force); }, q, VecX::Constant(n, 1e-6));
        w.add(0.0, fd::rel_error(dense(eval(q).jacobian, n), Jfd, 1e-12));
      }
    }
    judge("rft+damping", w, false);
  }
  {
    // full residual of every integrator with drag and damping switched on
    Worst w;
    EnvironmentSpec env;
    env.damping = 0.3;
    env.rft = true;
    env.rft_params = {0.2, 0.9, true};
    for (int trial = 0; trial < 100; ++trial) {
      SoftRobot r = wavy_rod();
      SimParams p;
      p.integrator = static_cast<Integrator>(trial % 3);
      p.dt = 0.01;
      TimeStepper s(r, p, std::make_shared<Environment>(r, env));
      RobotState prev = s.state();
      prev.u = 0.1 * VecX::Random(r.ndof());
      prev.a = VecX::Random(r.ndof());
      const VecX x = prev.q + 1e-3 * VecX::Random(r.ndof());
      const auto L = s.linearize(prev, x, p.dt, p.dt, 1.0, true);
      const MatX Jfd = fd::jacobian([&](const VecX& y) { return s.linearize(prev, y, p.dt, p.dt, 1.0, false).f; }, x,
                                    VecX::Constant(r.ndof(), 1e-7));
      w.add(0.0, fd::rel_error(dense(L.J, r.ndof()), Jfd));
    }
    judge("stepper residual", w, false);
  }
  return {ok, "worst relative errors:" + out.str()};
}

// ------------------------------------------------------------------ 3

Verdict contact_oracle() {
  fd::Rng rng(3001);
  double worst_dist = 0.0, worst_sum = 0.0, worst_friction = 0.0;
  std::set<ContactType> seen;
  auto check_forces = [&](const ContactPair& pair, const VecX& q, double dist) {
    if (!(dist > 0.0)) return;
    ContactParams p;
    p.enabled = true;
    p.k_c = 1e3;
    p.delta = 0.2 * dist;
    p.mu = rng.uniform(0.1, 1.0);
    p.nu_slip = 0.05;
    p.friction = true;
    ContactPair in = pair;
    in.contact_distance = dist * rng.uniform(0.9, 1.1);
    const VecX v = VecX::Random(12) * rng.uniform(0.0, 2.0);
    const ForceEval ev{q, v, q, 0.0, 0.1, 1.0, 10.0};
    const EnergyContribution con = pair_contact(in, p, ev, 12, false);
    const VecX fr = pair_contact(in, p, ev, 12, true).force - con.force;
    Vec3 sc = Vec3::Zero(), sf = Vec3::Zero();
    for (int k = 0; k < 4; ++k) {
      sc += con.force.segment<3>(3 * k);
      sf += fr.segment<3>(3 * k);
      const double fc = con.force.segment<3>(3 * k).norm();
      if (fc > 0.0) worst_friction = std::max(worst_friction, fr.segment<3>(3 * k).norm() / (p.mu * fc));
      else if (fr.segment<3>(3 * k).norm() > 0.0) worst_friction = INFINITY;
    }
    const double scale = con.force.norm();
    if (scale > 0.0) worst_sum = std::max(worst_sum, std::max(sc.norm(), sf.norm()) / scale);
  };
  for (int trial = 0; trial < 1000; ++trial) {
    const Vec3 a = rng.vec3(), b = rng.vec3(), c = rng.vec3(), d = rng.vec3();
    const Classification cls = classify_segments(a, b, c, d);
    seen.insert(cls.type);
    const double ref = oracle::segment_segment(a, b, c, d);
    worst_dist = std::max(worst_dist, std::abs(cls.distance - ref) / std::max(ref, 1e-12));
    ContactPair pair;
    pair.stencil = Stencil::EdgeEdge;
    pair.nodes = {0, 1, 2, 3};
    check_forces(pair, contact_cases::stack({a, b, c, d}), cls.distance);
  }
  for (int trial = 0; trial < 1000; ++trial) {
    const Vec3 p = rng.vec3(), a = rng.vec3(), b = rng.vec3(), c = rng.vec3();
    const Classification cls = classify_point_triangle(p, a, b, c);
    seen.insert(cls.type);
    const double ref = oracle::point_triangle(p, a, b, c);
    worst_dist = std::max(worst_dist, std::abs(cls.distance - ref) / std::max(ref, 1e-12));
    ContactPair pair;
    pair.stencil = Stencil::PointTriangle;
    pair.nodes = {0, 1, 2, 3};
    check_forces(pair, contact_cases::stack({p, a, b, c}), cls.distance);
  }
  const bool ok = worst_dist < 1e-4 && worst_sum < 1e-12 && worst_friction <= 1.0 + 1e-12 && seen.size() == 4;
  return {ok, fmt("distance vs sampling %.1e rel, pair-sum %.1e, max |F_fr|/(mu |F_con|) %.6f, %zu types seen",
                  worst_dist, worst_sum, worst_friction, seen.size())};
}

// ------------------------------------------------------------------ 4

// Folds of a draped disk: sign changes of the rim's radial distance around
// its mean, with hysteresis so wiggles do not count.
int fold_count(const VecX& q0, const VecX& q, int n) {
  double rmax = 0.0;
  for (int i = 0; i < n; ++i) rmax = std::max(rmax, node(q0, i).head<2>().norm());
  std::vector<std::pair<double, double>> rim;  // (rest angle, radial distance)
  for (int i = 0; i < n; ++i) {
    const Vec3 x0 = node(q0, i);
    if (x0.head<2>().norm() > 0.999 * rmax) rim.emplace_back(std::atan2(x0.y(), x0.x()), node(q, i).head<2>().norm());
  }
  std::sort(rim.begin(), rim.end());
  double mean = 0.0, lo = INFINITY, hi = -INFINITY;
  for (const auto& [a, r] : rim) {
    mean += r / rim.size();
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  const double band = 0.1 * (hi - lo);
  int state = 0, changes = 0;
  for (size_t k = 0; k < 2 * rim.size(); ++k) {
    const double s = rim[k % rim.size()].second - mean;
    const int now = s > band ? 1 : s < -band ? -1 : 0;
    if (now == 0) continue;
    if (state != 0 && now != state && k >= rim.size()) ++changes;
    state = now;
  }
  return changes / 2;
}

Verdict shell_folding() {
  struct Rect {
    double height = 0.0, extent = 0.0, ke_ratio = 0.0;
    bool ok = false;
  };
  auto rect = [](const std::string& name) {
    const ScenarioConfig cfg = bundled_scenario(name);
    const Trace tr = run(cfg, steps_of(cfg));
    Rect r;
    if (!tr.summary.ok) return r;
    const VecX& q = tr.q.back();
    double zmax = -INFINITY, xmin = INFINITY, xmax = -INFINITY;
    for (int i = 0; i < tr.nodes; ++i) {
      zmax = std::max(zmax, q[3 * i + 2]);
      xmin = std::min(xmin, q[3 * i]);
      xmax = std::max(xmax, q[3 * i]);
    }
    const double lx = cfg.mesh.params.at("lx");
    r.height = zmax - cfg.ground.height;
    r.extent = (xmax - xmin) / lx;
    r.ke_ratio = tr.diag.back().kinetic / (tr.mass * 9.81 * lx);
    // folded: flap lies over the base and the fold stands clear of the ground
    r.ok = r.extent < 0.75 && r.height > 10.0 * cfg.geometry.shell_thickness && r.ke_ratio < 1e-6;
    return r;
  };
  auto disk = [](const std::string& name) {
    const ScenarioConfig cfg = bundled_scenario(name);
    const Trace tr = run(cfg, steps_of(cfg));
    return tr.summary.ok ? fold_count(tr.q0, tr.q.back(), tr.nodes) : -1;
  };
  const Rect soft = rect("shell_fold_rect_1e8"), stiff = rect("shell_fold_rect_1e9");
  const int folds_soft = disk("shell_fold_disk_2e6"), folds_stiff = disk("shell_fold_disk_2e7");
  const bool ok = soft.ok && stiff.ok && stiff.height > soft.height && folds_stiff >= 0 && folds_soft >= folds_stiff;
  return {ok, fmt("rect fold height 100 MPa %.4f m, 1 GPa %.4f m (extent %.2f/%.2f L, KE/mgL %.0e/%.0e); "
                  "disk folds 2 MPa %d, 20 MPa %d",
                  soft.height, stiff.height, soft.extent, stiff.extent, soft.ke_ratio, stiff.ke_ratio, folds_soft,
                  folds_stiff)};
}

// ------------------------------------------------------------------ 5

Verdict helix() {
  std::ostringstream out;
  bool ok = true;
  for (const char* name : {"helix_1e7", "helix_1e9"}) {
    double low[2] = {0, 0};
    for (int k = 0; k < 2; ++k) {
      ScenarioConfig cfg = bundled_scenario(name);
      cfg.sim.integrator = k == 0 ? Integrator::ImplicitEuler : Integrator::NewmarkBeta;
      const Trace tr = run(cfg, 1);
      if (!tr.summary.ok) return {false, std::string(name) + ": " + tr.summary.error};
      // settled: the lowest node holds its height over the final second. Kinetic energy is only reported,
      // since the trapezoidal rule keeps a small step-to-step twist oscillation alive.
      int lowest = 0;
      for (int i = 0; i < tr.nodes; ++i)
        if (tr.q.back()[3 * i + 2] < tr.q.back()[3 * lowest + 2]) lowest = i;
      double zmin = INFINITY, zmax = -INFINITY, peak = 0.0;
      for (size_t f = 0; f < tr.q.size(); ++f) {
        peak = std::max(peak, tr.diag[f].kinetic);
        if (tr.t[f] < cfg.sim.total_time - 1.0 - 1e-9) continue;
        zmin = std::min(zmin, tr.q[f][3 * lowest + 2]);
        zmax = std::max(zmax, tr.q[f][3 * lowest + 2]);
      }
      low[k] = tr.q.back()[3 * lowest + 2];
      const double sag = std::abs(low[k] - tr.q0[3 * lowest + 2]);
      const bool settled = zmax - zmin < 0.01 * sag;
      ok = ok && settled;
      out << fmt(" %s %s: last-second range %.1e m of sag %.2e m, KE/peak %.0e%s;", name, k ? "newmark" : "euler",
                 zmax - zmin, sag, tr.diag.back().kinetic / peak, settled ? "" : " NOT SETTLED");
    }
    const double diff = std::abs(low[0] - low[1]) / std::abs(low[0]);
    ok = ok && diff < 0.01;
    out << fmt(" %s lowest node euler %.6f m, newmark %.6f m, diff %.4f%%;", name, low[0], low[1], 100 * diff);
  }
  return {ok, out.str()};
}

// ------------------------------------------------------------------ 6

Verdict snake() {
  auto cycles = [](double c_n) {
    ScenarioConfig cfg = bundled_scenario("snake");
    cfg.environment.rft_params.c_n = c_n;
    const int per_cycle = static_cast<int>(std::llround(1.0 / (cfg.actuation.frequency * cfg.sim.dt)));
    const Trace tr = run(cfg, per_cycle);
    std::vector<double> x;  // centroid x once per actuation period
    for (size_t f = 0; f < tr.q.size(); ++f) {
      if (tr.t[f] < cfg.actuation.ramp_time - 1e-9) continue;
      double c = 0.0;
      const int n = tr.nodes;
      for (int i = 0; i < n; ++i) c += tr.q[f][3 * i] / n;
      x.push_back(c);
    }
    return std::pair(tr.summary.ok, x);
  };
  const double L = 0.1;
  const auto [ok_a, xa] = cycles(5.0);
  const auto [ok_i, xi] = cycles(0.5);
  if (!ok_a || !ok_i || xa.size() < 3 || xi.size() < 3) return {false, "snake run failed"};
  const double dir = xa.back() < xa.front() ? -1.0 : 1.0;
  double min_step = INFINITY, max_iso = 0.0;
  for (size_t k = 1; k < xa.size(); ++k) min_step = std::min(min_step, dir * (xa[k] - xa[k - 1]));
  for (size_t k = 1; k < xi.size(); ++k) max_iso = std::max(max_iso, std::abs(xi[k] - xi[k - 1]));
  const bool ok = min_step > 0.0 && max_iso < 0.01 * L;
  return {ok, fmt("c_n > c_t: %zu cycles, per-cycle advance min %.4f m (%.1f%% L), net %.4f m; c_n = c_t: max "
                  "per-cycle drift %.2e m (%.4f%% L)",
                  xa.size() - 1, min_step, 100 * min_step / L, std::abs(xa.back() - xa.front()), max_iso,
                  100 * max_iso / L)};
}

// ------------------------------------------------------------------ 7

Verdict control() {
  const Trace s = run(bundled_scenario("s_shape"), 10);
  if (!s.summary.ok || s.control.empty() || !s.control.front().nodal_rmse) return {false, "s_shape run failed"};
  const double strain = s.control.back().strain_residual / s.control.front().strain_residual;
  const double rmse = *s.control.back().nodal_rmse / *s.control.front().nodal_rmse;

  const ScenarioConfig sc = bundled_scenario("serpentine");
  const Trace p = run(sc, 1);
  if (!p.summary.ok || p.control.empty()) return {false, "serpentine run failed"};
  const double r0 = p.control.front().strain_residual;
  double tail = 0.0;
  for (size_t k = 0; k < p.control.size(); ++k)
    if (p.t[k] >= sc.sim.total_time - 1.0 - 1e-9) tail = std::max(tail, p.control[k].strain_residual);
  const bool ok = strain < 0.01 && rmse < 0.01 && tail < 1e-3 * r0;
  return {ok, fmt("S-shape final/initial strain residual %.3f%%, nodal RMSE %.3f%%; serpentine max residual over "
                  "last 1 s %.2e of initial %.3e (%.4f%%)",
                  100 * strain, 100 * rmse, tail, r0, 100 * tail / r0)};
}

// ------------------------------------------------------------------ 8

// Energy history of a 1 m spring anchored at node 0: a swinging elastic
// pendulum under gravity, or a purely axial oscillator without it.
std::vector<double> energies(Integrator integ, double dt, double total, bool pendulum) {
  MeshInput m = straight_chain(2, 1.0);
  SoftRobot r = build_robot(m, geometry(0.01), material(2e4, 0.5), ShellModel::Hinge);
  SimParams p;
  p.integrator = integ;
  p.dt = dt;
  p.total_time = total;
  p.newton_tol = 1e-9;
  p.newton_rel_tol = 0.0;
  EnvironmentSpec env;
  env.gravity = pendulum;
  TimeStepper s(r, p, std::make_shared<Environment>(r, env));
  s.constraints().fix_nodes({0}, r.q0);
  s.constraints().fix_edges({0}, r.q0);
  if (!pendulum) {
    // axial oscillation: the stretch energy is exactly quadratic
    RobotState st = s.state();
    st.u[3] = 0.5;
    s.constraints().fix_dof(4, 0.0);
    s.constraints().fix_dof(5, 0.0);
    s.set_state(st);
  }
  std::vector<double> e;
  s.simulate(1, [&](const RobotState&, const StepDiagnostics& d) { e.push_back(d.total_energy()); });
  return e;
}

double drift(const std::vector<double>& e) {
  double d = 0.0;
  for (double x : e) d = std::max(d, std::abs(x - e.front()));
  return d;
}

Verdict integrators() {
  // elastic pendulum: mass ~0.157 kg on a 1 m spring, energy scale m g L
  const double scale = 0.5 * 1000 * pi * 1e-4 * 9.81;
  const double harmonic = drift(energies(Integrator::ImplicitMidpoint, 0.01, 2.0, false));
  const double harmonic_scale = 0.5 * 0.5 * 1000 * pi * 1e-4 * 0.25;
  const double d1 = drift(energies(Integrator::ImplicitMidpoint, 0.02, 2.0, true));
  const double d2 = drift(energies(Integrator::ImplicitMidpoint, 0.01, 2.0, true));
  const double d3 = drift(energies(Integrator::ImplicitMidpoint, 0.005, 2.0, true));
  const double ratio1 = d1 / d2, ratio2 = d2 / d3;
  const auto nm = energies(Integrator::NewmarkBeta, 1e-3, 10.0, true);
  const double newmark = drift(nm) / scale;

  // the softest cantilever swings for a while before Euler damps it out; a
  // tight solver tolerance keeps Newton noise out of the energy balance
  ScenarioConfig cfg = bundled_scenario("cantilever_1e5");
  cfg.sim.newton_tol = 1e-11;
  const Trace tr = run(cfg, 1);
  double worst_rise = -INFINITY, emax = 0.0;
  for (const auto& d : tr.diag) emax = std::max(emax, std::abs(d.total_energy()));
  for (size_t k = 1; k < tr.diag.size(); ++k)
    worst_rise = std::max(worst_rise, tr.diag[k].total_energy() - tr.diag[k - 1].total_energy());
  const bool monotone = tr.summary.ok && worst_rise <= 1e-12 * emax &&
                        tr.diag.back().total_energy() < tr.diag[1].total_energy();

  const bool ok = harmonic < 1e-9 * harmonic_scale && ratio1 > 3.5 && ratio1 < 4.5 && ratio2 > 3.5 &&
                  ratio2 < 4.5 && nm.size() == 10001 && newmark < 1e-3 && monotone;
  return {ok, fmt("midpoint: harmonic drift %.1e (rel %.1e), anharmonic drift ratios %.3f, %.3f on halving dt; "
                  "Newmark %zu steps drift %.2e%%; Euler cantilever largest step-to-step energy change %+.2e J "
                  "(|E| <= %.2e J)",
                  harmonic, harmonic / harmonic_scale, ratio1, ratio2, nm.size() - 1, 100 * newmark, worst_rise,
                  emax)};
}

// ------------------------------------------------------------------ 9

Verdict determinism() {
  auto same = [](const Trace& a, const Trace& b) {
    if (a.q.size() != b.q.size() || !a.summary.ok || !b.summary.ok) return false;
    for (size_t k = 0; k < a.q.size(); ++k)
      if (a.q[k] != b.q[k] || a.t[k] != b.t[k]) return false;
    return true;
  };
  std::vector<ScenarioConfig> cases;
  for (const auto& [name, total] : {std::pair("snake", 0.5), {"shell_fold_disk_2e6", 0.05}, {"s_shape", 0.05}}) {
    ScenarioConfig c = bundled_scenario(name);
    c.sim.total_time = total;
    c.sim.threads = 1;
    cases.push_back(c);
  }
  int identical = 0, reloaded = 0;
  const auto path = std::filesystem::temp_directory_path() / "rodshell_acceptance_resolved.json";
  for (const auto& c : cases) {
    const Trace a = run(c, 1), b = run(c, 1);
    identical += same(a, b);
    {
      std::ofstream out(path);
      out << dump_config(c);
    }
    const ScenarioConfig back = load_config(path.string());
    reloaded += same(a, run(back, 1)) && dump_config(back) == dump_config(c);
  }
  std::filesystem::remove(path);
  int stable = 0;
  const auto names = scenario_names();
  for (const auto& n : names) {
    const std::string once = dump_config(bundled_scenario(n));
    stable += dump_config(parse_config(once, "resolved " + n)) == once;
  }
  const int nc = static_cast<int>(cases.size());
  const bool ok = identical == nc && reloaded == nc && stable == static_cast<int>(names.size());
  return {ok, fmt("bitwise identical reruns %d/%d, resolved-config reload reproduces run %d/%d, resolve round trip "
                  "stable %d/%zu scenarios",
                  identical, nc, reloaded, nc, stable, names.size())};
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* name;
    Verdict (*check)();
  };
  const Criterion all[] = {{1, "cantilever vs beam theory", cantilever},
                           {2, "gradient and Jacobian suite", gradients},
                           {3, "contact oracle", contact_oracle},
                           {4, "shell self-folding", shell_folding},
                           {5, "helix integrator consistency", helix},
                           {6, "snake propulsion", snake},
                           {7, "PI control", control},
                           {8, "integrator properties", integrators},
                           {9, "determinism and round trip", determinism}};
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  set_warnings_quiet(true);
  int failed = 0;
  for (const auto& c : all) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %d %s: %s (%.1f s) %s\n", c.id, c.name, v.pass ? "PASS" : "FAIL", wall, v.detail.c_str());
    std::fflush(stdout);
    failed += !v.pass;
  }
  return failed == 0 ? 0 : 1;
}
