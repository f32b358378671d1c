#include "rodshell/external.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace rodshell {

double Schedule::operator()(double t) const {
  switch (shape) {
    case Shape::Constant:
      return 1.0;
    case Shape::Ramp:
      return duration > 0.0 ? std::clamp(t / duration, 0.0, 1.0) : 1.0;
    case Shape::Sine:
      return std::sin(2.0 * std::numbers::pi * frequency * t + phase);
  }
  return 0.0;
}

void Gravity::add(const ForceEval& ev, EnergyContribution& out) const {
  const double s = ev.load_scale;
  for (int i = 0; i < robot_.n_nodes(); ++i) {
    const Vec3 f = s * robot_.mass[3 * i] * g_;
    out.force.segment<3>(3 * i) += f;
    out.energy -= f.dot(ev.q.segment<3>(3 * i));
  }
}

Buoyancy::Buoyancy(const SoftRobot& robot, const Vec3& g, double fluid_density)
    : g_(g), rho_(fluid_density), volume_(VecX::Zero(robot.n_nodes())) {
  const auto& nodes = robot.mesh.nodes;
  for (const Edge& e : robot.edges) {
    if (e.kind != EdgeKind::Rod) continue;
    const double v = robot.rod_area() * (nodes[e.b] - nodes[e.a]).norm();
    volume_[e.a] += 0.5 * v;
    volume_[e.b] += 0.5 * v;
  }
  for (const auto& tri : robot.mesh.triangles) {
    const double area = 0.5 * (nodes[tri[1]] - nodes[tri[0]]).cross(nodes[tri[2]] - nodes[tri[0]]).norm();
    for (int v : tri) volume_[v] += robot.geometry.shell_thickness * area / 3.0;
  }
}

void Buoyancy::add(const ForceEval& ev, EnergyContribution& out) const {
  for (int i = 0; i < volume_.size(); ++i) {
    const Vec3 f = -ev.load_scale * rho_ * volume_[i] * g_;
    out.force.segment<3>(3 * i) += f;
    out.energy -= f.dot(ev.q.segment<3>(3 * i));
  }
}

void ViscousDamping::add(const ForceEval& ev, EnergyContribution& out) const {
  if (eta_ == 0.0) return;
  out.force -= eta_ * robot_.mass.cwiseProduct(ev.v);
  for (int i = 0; i < robot_.ndof(); ++i) out.jacobian.emplace_back(i, i, -eta_ * robot_.mass[i] * ev.dv);
}

void RftDrag::add(const ForceEval& ev, EnergyContribution& out) const {
  const auto& nodes = robot_.mesh.nodes;
  const double dc = p_.c_t - p_.c_n;
  for (const Edge& e : robot_.edges) {
    if (e.kind != EdgeKind::Rod) continue;
    const double rest = (nodes[e.b] - nodes[e.a]).norm();
    const Vec3 d = ev.q.segment<3>(3 * e.b) - ev.q.segment<3>(3 * e.a);
    const double len = d.norm();
    if (len == 0.0) throw GeometryError("zero-length edge in drag");
    const Vec3 t = d / len;
    const Vec3 u = 0.5 * (ev.v.segment<3>(3 * e.a) + ev.v.segment<3>(3 * e.b));
    const double ut = u.dot(t);
    // F_e = -rest (c_n u + (c_t - c_n)(u.t) t)
    const Vec3 f = -rest * (p_.c_n * u + dc * ut * t);
    out.force.segment<3>(3 * e.a) += 0.5 * f;
    out.force.segment<3>(3 * e.b) += 0.5 * f;

    const Mat3 D = p_.c_n * Mat3::Identity() + dc * t * t.transpose();
    const Mat3 Jv = -0.25 * rest * ev.dv * D;  // per endpoint pair
    Mat3 Jt = Mat3::Zero();                    // d(half F) / d x_b through t
    if (p_.tangent_terms) {
      const Mat3 P = (Mat3::Identity() - t * t.transpose()) / len;
      Jt = -0.5 * rest * dc * (t * u.transpose() + ut * Mat3::Identity()) * P * ev.dq;
    }
    const int rows[2] = {3 * e.a, 3 * e.b};
    for (int r : rows)
      for (int c = 0; c < 2; ++c) {
        const Mat3 block = Jv + (c == 1 ? Jt : Mat3(-Jt));
        for (int a = 0; a < 3; ++a)
          for (int b = 0; b < 3; ++b)
            if (block(a, b) != 0.0) out.jacobian.emplace_back(r + a, rows[c] + b, block(a, b));
      }
  }
}

PointForces::PointForces(const SoftRobot& robot, std::vector<PointLoad> loads) : loads_(std::move(loads)) {
  for (const auto& l : loads_)
    if (l.node < 0 || l.node >= robot.n_nodes())
      throw ConfigError("point load on unknown node " + std::to_string(l.node));
}

void PointForces::add(const ForceEval& ev, EnergyContribution& out) const {
  for (const auto& l : loads_) out.force.segment<3>(3 * l.node) += ev.load_scale * l.schedule(ev.t) * l.vector;
}

double enclosed_volume(const SoftRobot& robot, const VecX& q, VecX* grad) {
  double v = 0.0;
  if (grad) *grad = VecX::Zero(q.size());
  for (const auto& tri : robot.mesh.triangles) {
    const Vec3 a = q.segment<3>(3 * tri[0]), b = q.segment<3>(3 * tri[1]), c = q.segment<3>(3 * tri[2]);
    v += a.dot(b.cross(c)) / 6.0;
    if (grad) {
      grad->segment<3>(3 * tri[0]) += b.cross(c) / 6.0;
      grad->segment<3>(3 * tri[1]) += c.cross(a) / 6.0;
      grad->segment<3>(3 * tri[2]) += a.cross(b) / 6.0;
    }
  }
  return v;
}

void Thrust::add(const ForceEval& ev, EnergyContribution& out) const {
  if (k_ == 0.0 || ev.u_prev == nullptr) return;
  VecX grad;
  enclosed_volume(robot_, ev.q_prev, &grad);
  // orientation of the mesh fixes the sign of V; contraction shrinks |V|
  const double v0 = enclosed_volume(robot_, ev.q_prev);
  double rate = grad.dot(*ev.u_prev);
  if (v0 < 0.0) rate = -rate;
  const double fz = ev.load_scale * k_ * std::max(0.0, -rate);
  if (fz == 0.0) return;
  double total = 0.0;
  for (int i = 0; i < robot_.n_nodes(); ++i) total += robot_.mass[3 * i];
  for (int i = 0; i < robot_.n_nodes(); ++i) out.force[3 * i + 2] += fz * robot_.mass[3 * i] / total;
}

Environment::Environment(const SoftRobot& robot, const EnvironmentSpec& spec) : spec_(spec) {
  if (spec.damping < 0.0 || spec.fluid_density < 0.0 || spec.rft_params.c_t < 0.0 || spec.rft_params.c_n < 0.0 ||
      spec.k_thrust < 0.0)
    throw ConfigError("environment coefficients must be non-negative");
  if (spec.gravity) terms_.push_back(std::make_unique<Gravity>(robot, spec.g));
  if (spec.buoyancy) terms_.push_back(std::make_unique<Buoyancy>(robot, spec.g, spec.fluid_density));
  if (spec.damping > 0.0) terms_.push_back(std::make_unique<ViscousDamping>(robot, spec.damping));
  if (spec.rft) terms_.push_back(std::make_unique<RftDrag>(robot, spec.rft_params));
  if (!spec.loads.empty()) terms_.push_back(std::make_unique<PointForces>(robot, spec.loads));
  if (spec.k_thrust > 0.0) terms_.push_back(std::make_unique<Thrust>(robot, spec.k_thrust));
}

void Environment::add(const ForceEval& ev, EnergyContribution& out) const {
  for (const auto& term : terms_) term->add(ev, out);
}

double Environment::potential(const VecX& q) const {
  const VecX zero = VecX::Zero(q.size());
  const ForceEval ev{q, zero, q};
  double e = 0.0;
  for (const auto& term : terms_) {
    if (term->name() != "gravity" && term->name() != "buoyancy") continue;
    EnergyContribution c(static_cast<int>(q.size()));
    term->add(ev, c);
    e += c.energy;
  }
  return e;
}

}  // namespace rodshell
