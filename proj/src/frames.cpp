#include "rodshell/frames.hpp"

#include "rodshell/log.hpp"

#include <cmath>
#include <deque>
#include <numbers>

namespace rodshell {
namespace {

Vec3 tangent(const SoftRobot& robot, const VecX& q, int e) {
  const Edge& ed = robot.edges[e];
  const Vec3 v = robot.node(q, ed.b) - robot.node(q, ed.a);
  const double len = v.norm();
  if (!(len > 1e-12)) throw GeometryError("edge " + std::to_string(e) + " has zero length");
  return v / len;
}

Vec3 seed_d1(const Vec3& t) {
  int axis = 0;
  for (int k = 1; k < 3; ++k)
    if (std::abs(t[k]) < std::abs(t[axis])) axis = k;
  const Vec3 a = Vec3::Unit(axis);
  return (a - a.dot(t) * t).normalized();
}

Vec3 orthonormalize(const Vec3& d1, const Vec3& t) {
  const Vec3 v = d1 - d1.dot(t) * t;
  return v.normalized();
}

}  // namespace

Vec3 parallel_transport(const Vec3& v, const Vec3& t_from, const Vec3& t_to) {
  return values(transport(V3<double>::from(v), V3<double>::from(t_from), V3<double>::from(t_to)));
}

void material_frame(const Vec3& d1, const Vec3& d2, double theta, Vec3& m1, Vec3& m2) {
  const double c = std::cos(theta), s = std::sin(theta);
  m1 = d1 * c + d2 * s;
  m2 = d2 * c - d1 * s;
}

double unwrap_angle(double raw, double previous) {
  const double two_pi = 2.0 * std::numbers::pi;
  return raw + two_pi * std::round((previous - raw) / two_pi);
}

double signed_angle(const Vec3& a, const Vec3& b, const Vec3& axis) {
  return std::atan2(a.cross(b).dot(axis), a.dot(b));
}

double compute_reference_twist(const SoftRobot& robot, const BendTwistSpring& s,
                               const FrameSet& frames, double previous) {
  (void)robot;
  const double si = s.signs[0], sj = s.signs[1];
  const Vec3 ti = si * frames.t[s.edges[0]], tj = sj * frames.t[s.edges[1]];
  const Vec3 d1i = si * frames.d1[s.edges[0]], d1j = sj * frames.d1[s.edges[1]];
  const Vec3 u = parallel_transport(d1i, ti, tj);
  return unwrap_angle(signed_angle(u, d1j, tj), previous);
}

FrameSet init_reference_frames(const SoftRobot& robot, const VecX& q) {
  const int ne = static_cast<int>(robot.edges.size());
  FrameSet f;
  f.t.resize(ne);
  f.d1.resize(ne);
  f.d2.resize(ne);
  for (int e = 0; e < ne; ++e) {
    f.t[e] = tangent(robot, q, e);
    f.d1[e] = seed_d1(f.t[e]);
  }

  std::vector<std::vector<int>> incident(robot.n_nodes());
  for (int e = 0; e < ne; ++e) {
    if (robot.dofs.twist_offset[e] < 0) continue;
    incident[robot.edges[e].a].push_back(e);
    incident[robot.edges[e].b].push_back(e);
  }
  std::vector<char> seen(ne, 0);
  for (int root = 0; root < ne; ++root) {
    if (robot.dofs.twist_offset[root] < 0 || seen[root]) continue;
    seen[root] = 1;
    std::deque<int> queue{root};
    while (!queue.empty()) {
      const int p = queue.front();
      queue.pop_front();
      for (int shared : {robot.edges[p].a, robot.edges[p].b}) {
        const double sp = robot.edges[p].b == shared ? 1.0 : -1.0;
        for (int c : incident[shared]) {
          if (seen[c]) continue;
          seen[c] = 1;
          const double sc = robot.edges[c].a == shared ? 1.0 : -1.0;
          const Vec3 d = parallel_transport(sp * f.d1[p], sp * f.t[p], sc * f.t[c]);
          f.d1[c] = orthonormalize(sc * d, f.t[c]);
          queue.push_back(c);
        }
      }
    }
  }
  for (int e = 0; e < ne; ++e) f.d2[e] = f.t[e].cross(f.d1[e]);

  f.ref_twist.resize(robot.bend_twist_springs.size());
  for (const auto& s : robot.bend_twist_springs)
    f.ref_twist[s.id] = compute_reference_twist(robot, s, f, 0.0);

  f.n_avg.assign(ne, Vec3::Zero());
  f.tau0.assign(ne, Vec3::Zero());
  update_midedge_edge_frames(robot, q, f);
  return f;
}

FrameSet update_frames_after_step(const SoftRobot& robot, const FrameSet& old, const VecX& q_new) {
  FrameSet f = old;
  const int ne = static_cast<int>(robot.edges.size());
  for (int e = 0; e < ne; ++e) {
    const Vec3 t = tangent(robot, q_new, e);
    Vec3 d1 = parallel_transport(old.d1[e], old.t[e], t);
    if (std::abs(d1.dot(t)) > 1e-12 || std::abs(d1.norm() - 1.0) > 1e-12) d1 = orthonormalize(d1, t);
    f.t[e] = t;
    f.d1[e] = d1;
    f.d2[e] = t.cross(d1);
  }
  for (const auto& s : robot.bend_twist_springs)
    f.ref_twist[s.id] = compute_reference_twist(robot, s, f, old.ref_twist[s.id]);
  update_midedge_edge_frames(robot, q_new, f);
  return f;
}

void update_midedge_edge_frames(const SoftRobot& robot, const VecX& q, FrameSet& f) {
  if (robot.shell_model != ShellModel::MidEdge) return;
  const auto& tris = robot.mesh.triangles;
  for (size_t e = 0; e < robot.edges.size(); ++e) {
    const Edge& ed = robot.edges[e];
    if (ed.kind != EdgeKind::Shell) continue;
    Vec3 sum = Vec3::Zero();
    for (int t : robot.edge_triangles[e]) {
      const auto& tri = tris[t];
      const Vec3 x0 = robot.node(q, tri[0]);
      sum += (robot.node(q, tri[1]) - x0).cross(robot.node(q, tri[2]) - x0).normalized();
    }
    const Vec3 ehat = tangent(robot, q, static_cast<int>(e));
    if (sum.norm() < 1e-8) {
      if (f.tau0[e].isZero())
        throw GeometryError("shell edge " + std::to_string(e) + " has opposite face normals");
      warn("shell edge " + std::to_string(e) + " folded through; keeping previous tau0");
      continue;
    }
    f.n_avg[e] = sum.normalized();
    f.tau0[e] = f.n_avg[e].cross(ehat);
  }
}

}  // namespace rodshell
