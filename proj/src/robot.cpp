#include "rodshell/elastic.hpp"
#include "rodshell/frames.hpp"
#include "rodshell/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <tuple>

namespace rodshell {
namespace {

using EdgeKey = std::pair<int, int>;
EdgeKey key(int a, int b) { return {std::min(a, b), std::max(a, b)}; }

int other_end(const Edge& e, int node) { return e.a == node ? e.b : e.a; }

}  // namespace

double SoftRobot::rod_area() const {
  const double r = geometry.rod_radius;
  return std::numbers::pi * r * r;
}
double SoftRobot::rod_inertia() const {
  const double r = geometry.rod_radius;
  return std::numbers::pi * r * r * r * r / 4.0;
}
double SoftRobot::rod_polar() const { return 2.0 * rod_inertia(); }

double SoftRobot::total_mass() const {
  double m = 0.0;
  for (const auto& e : mesh.rod_edges)
    m += material.rod.density * rod_area() * (mesh.nodes[e[1]] - mesh.nodes[e[0]]).norm();
  for (const auto& t : mesh.triangles) {
    const double area =
        0.5 * (mesh.nodes[t[1]] - mesh.nodes[t[0]]).cross(mesh.nodes[t[2]] - mesh.nodes[t[0]]).norm();
    m += material.shell.density * geometry.shell_thickness * area;
  }
  return m;
}

void validate_mesh(const MeshInput& mesh) {
  const int n = static_cast<int>(mesh.nodes.size());
  auto check = [n](int i, const std::string& what) {
    if (i < 0 || i >= n)
      throw TopologyError(what + " references node " + std::to_string(i) + " outside [0, " +
                          std::to_string(n) + ")");
  };
  std::set<EdgeKey> rod_keys;
  for (size_t k = 0; k < mesh.rod_edges.size(); ++k) {
    const auto& e = mesh.rod_edges[k];
    const std::string what = "rod edge " + std::to_string(k);
    check(e[0], what);
    check(e[1], what);
    if (e[0] == e[1]) throw TopologyError(what + " joins a node to itself");
    if (!rod_keys.insert(key(e[0], e[1])).second) throw TopologyError(what + " is a duplicate");
    if ((mesh.nodes[e[0]] - mesh.nodes[e[1]]).norm() < 1e-12)
      throw GeometryError(what + " has zero length");
  }
  std::map<EdgeKey, int> incidence;
  for (size_t k = 0; k < mesh.triangles.size(); ++k) {
    const auto& t = mesh.triangles[k];
    const std::string what = "triangle " + std::to_string(k);
    for (int v : t) check(v, what);
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2])
      throw TopologyError(what + " has repeated vertices");
    const double area =
        0.5 * (mesh.nodes[t[1]] - mesh.nodes[t[0]]).cross(mesh.nodes[t[2]] - mesh.nodes[t[0]]).norm();
    if (area < 1e-12) throw GeometryError(what + " is degenerate (area < 1e-12 m^2)");
    for (int j = 0; j < 3; ++j) {
      const EdgeKey ek = key(t[j], t[(j + 1) % 3]);
      if (rod_keys.count(ek))
        throw TopologyError(what + " shares an edge with a rod edge");
      if (++incidence[ek] > 2)
        throw TopologyError("non-manifold shell edge (" + std::to_string(ek.first) + ", " +
                            std::to_string(ek.second) + ") has more than 2 triangles");
    }
  }
}

JointInfo classify_joints(const MeshInput& mesh, const std::vector<Edge>& edges) {
  std::vector<char> on_rod(mesh.nodes.size(), 0), on_shell(mesh.nodes.size(), 0);
  for (const auto& e : mesh.rod_edges) on_rod[e[0]] = on_rod[e[1]] = 1;
  for (const auto& t : mesh.triangles)
    for (int v : t) on_shell[v] = 1;
  JointInfo info;
  for (size_t i = 0; i < mesh.nodes.size(); ++i)
    if (on_rod[i] && on_shell[i]) info.joint_nodes.push_back(static_cast<int>(i));
  std::set<int> joints(info.joint_nodes.begin(), info.joint_nodes.end());
  for (size_t k = 0; k < edges.size(); ++k)
    if (edges[k].kind == EdgeKind::Shell && (joints.count(edges[k].a) || joints.count(edges[k].b)))
      info.promoted_edges.push_back(static_cast<int>(k));
  return info;
}

std::vector<BendTwistSpring> derive_bend_twist_springs(const std::vector<Edge>& edges,
                                                       const std::vector<int>& twist_edges,
                                                       int n_nodes) {
  std::vector<std::vector<int>> incident(n_nodes);
  for (int e : twist_edges) {
    incident[edges[e].a].push_back(e);
    incident[edges[e].b].push_back(e);
  }
  std::vector<BendTwistSpring> springs;
  for (int n = 0; n < n_nodes; ++n) {
    auto& list = incident[n];
    std::sort(list.begin(), list.end());
    for (size_t p = 0; p < list.size(); ++p) {
      for (size_t r = p + 1; r < list.size(); ++r) {
        int i = list[p], j = list[r];
        if (edges[i].kind == EdgeKind::Shell && edges[j].kind == EdgeKind::Shell) continue;
        int m = other_end(edges[i], n), o = other_end(edges[j], n);
        if (m > o) {
          std::swap(i, j);
          std::swap(m, o);
        }
        BendTwistSpring s;
        s.nodes = {m, n, o};
        s.edges = {i, j};
        s.signs = {edges[i].a == m ? 1 : -1, edges[j].a == n ? 1 : -1};
        springs.push_back(s);
      }
    }
  }
  std::sort(springs.begin(), springs.end(), [](const auto& x, const auto& y) {
    return std::tie(x.nodes[0], x.nodes[1], x.nodes[2]) < std::tie(y.nodes[0], y.nodes[1], y.nodes[2]);
  });
  for (size_t k = 0; k < springs.size(); ++k) springs[k].id = static_cast<int>(k);
  return springs;
}

VecX compute_lumped_mass(const SoftRobot& robot) {
  const auto& mesh = robot.mesh;
  VecX m = VecX::Zero(robot.ndof());
  const double rho_r = robot.material.rod.density;
  const double rho_s = robot.material.shell.density;
  const double h = robot.geometry.shell_thickness;
  const double r = robot.geometry.rod_radius;
  for (size_t k = 0; k < robot.edges.size(); ++k) {
    const Edge& e = robot.edges[k];
    const double len = (mesh.nodes[e.b] - mesh.nodes[e.a]).norm();
    if (e.kind == EdgeKind::Rod) {
      const double me = rho_r * robot.rod_area() * len;
      for (int d = 0; d < 3; ++d) {
        m[3 * e.a + d] += 0.5 * me;
        m[3 * e.b + d] += 0.5 * me;
      }
    }
    if (robot.dofs.twist_offset[k] >= 0)
      m[robot.dofs.twist_offset[k]] += rho_r * robot.rod_area() * len * r * r / 2.0;
  }
  for (size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    const double area = 0.5 * (mesh.nodes[tri[1]] - mesh.nodes[tri[0]])
                                  .cross(mesh.nodes[tri[2]] - mesh.nodes[tri[0]])
                                  .norm();
    const double share = rho_s * h * area / 3.0;
    for (int v : tri)
      for (int d = 0; d < 3; ++d) m[3 * v + d] += share;
    for (int e : robot.triangle_edges[t])
      if (robot.dofs.midedge_offset[e] >= 0)
        m[robot.dofs.midedge_offset[e]] += share * h * h / 12.0;
  }
  for (int i = 0; i < m.size(); ++i)
    if (!(m[i] > 0.0)) throw ConfigError("DOF " + std::to_string(i) + " has zero mass");
  return m;
}

SoftRobot build_robot(const MeshInput& mesh, const Geometry& geometry, const Material& material,
                      ShellModel model) {
  validate_mesh(mesh);
  SoftRobot robot;
  robot.mesh = mesh;
  robot.geometry = geometry;
  robot.material = material;
  robot.shell_model = model;
  const int n_nodes = static_cast<int>(mesh.nodes.size());

  if (!mesh.rod_edges.empty() && !(geometry.rod_radius > 0.0))
    throw ConfigError("rod radius must be positive");
  if (!mesh.triangles.empty() && !(geometry.shell_thickness > 0.0))
    throw ConfigError("shell thickness must be positive");

  for (const auto& e : mesh.rod_edges) robot.edges.push_back({e[0], e[1], EdgeKind::Rod});
  std::map<EdgeKey, int> shell_index;
  robot.triangle_edges.resize(mesh.triangles.size());
  for (size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    for (int j = 0; j < 3; ++j) {
      const int a = tri[j], b = tri[(j + 1) % 3];
      auto [it, fresh] = shell_index.try_emplace(key(a, b), static_cast<int>(robot.edges.size()));
      if (fresh) robot.edges.push_back({a, b, EdgeKind::Shell});
      robot.triangle_edges[t][(j + 2) % 3] = it->second;
    }
  }
  const int n_edges = static_cast<int>(robot.edges.size());
  robot.edge_triangles.assign(n_edges, {});
  for (size_t t = 0; t < mesh.triangles.size(); ++t)
    for (int e : robot.triangle_edges[t]) robot.edge_triangles[e].push_back(static_cast<int>(t));

  const JointInfo joints = classify_joints(mesh, robot.edges);
  robot.joint_nodes = joints.joint_nodes;
  robot.promoted_edges = joints.promoted_edges;

  DofLayout& dofs = robot.dofs;
  dofs.n_nodes = n_nodes;
  dofs.n_rod_edges = static_cast<int>(mesh.rod_edges.size());
  dofs.n_shell_edges = n_edges - dofs.n_rod_edges;
  dofs.twist_offset.assign(n_edges, -1);
  dofs.midedge_offset.assign(n_edges, -1);
  int next = 3 * n_nodes;
  std::set<int> promoted(joints.promoted_edges.begin(), joints.promoted_edges.end());
  std::vector<int> twist_edges;
  for (int e = 0; e < n_edges; ++e) {
    if (robot.edges[e].kind == EdgeKind::Rod || promoted.count(e)) {
      dofs.twist_offset[e] = next++;
      twist_edges.push_back(e);
    }
  }
  if (model == ShellModel::MidEdge)
    for (int e = 0; e < n_edges; ++e)
      if (robot.edges[e].kind == EdgeKind::Shell) dofs.midedge_offset[e] = next++;
  dofs.total_dofs = next;

  // stretch
  for (int e = 0; e < n_edges; ++e) {
    const Edge& ed = robot.edges[e];
    StretchSpring s;
    s.node_a = ed.a;
    s.node_b = ed.b;
    s.edge = e;
    s.rest_length = (mesh.nodes[ed.b] - mesh.nodes[ed.a]).norm();
    s.stiffness = ed.kind == EdgeKind::Rod
                      ? rod_stretch_stiffness(geometry, material.rod)
                      : shell_stretch_stiffness(geometry, material.shell, s.rest_length);
    robot.stretch_springs.push_back(s);
  }
  std::sort(robot.stretch_springs.begin(), robot.stretch_springs.end(), [](const auto& x, const auto& y) {
    return key(x.node_a, x.node_b) < key(y.node_a, y.node_b);
  });

  // bend-twist
  robot.bend_twist_springs = derive_bend_twist_springs(robot.edges, twist_edges, n_nodes);
  for (auto& s : robot.bend_twist_springs) {
    const double li = (mesh.nodes[s.nodes[1]] - mesh.nodes[s.nodes[0]]).norm();
    const double lj = (mesh.nodes[s.nodes[2]] - mesh.nodes[s.nodes[1]]).norm();
    s.voronoi_length = 0.5 * (li + lj);
    s.bend_stiffness = rod_bend_stiffness(geometry, material.rod);
    s.twist_stiffness = rod_twist_stiffness(geometry, material.rod);
  }

  // hinges or triangle springs
  for (int e = 0; e < n_edges; ++e) {
    if (robot.edges[e].kind != EdgeKind::Shell) continue;
    const auto& adj = robot.edge_triangles[e];
    for (int t : adj) {
      const auto& tri = mesh.triangles[t];
      int forward = 0;
      for (int j = 0; j < 3; ++j)
        if (tri[j] == robot.edges[e].a && tri[(j + 1) % 3] == robot.edges[e].b) forward = 1;
      if (adj.size() == 2 && model == ShellModel::MidEdge && t == adj[1] && forward)
        throw TopologyError("shell triangles around edge (" + std::to_string(robot.edges[e].a) +
                            ", " + std::to_string(robot.edges[e].b) +
                            ") are not consistently oriented");
    }
    if (model != ShellModel::Hinge || adj.size() != 2) continue;
    auto apex = [&](int t) {
      for (int v : mesh.triangles[t])
        if (v != robot.edges[e].a && v != robot.edges[e].b) return v;
      return -1;
    };
    HingeSpring h;
    h.edge = e;
    h.nodes = {apex(adj[0]), robot.edges[e].a, robot.edges[e].b, apex(adj[1])};
    h.stiffness = hinge_stiffness(geometry, material.shell);
    robot.hinge_springs.push_back(h);
  }
  std::sort(robot.hinge_springs.begin(), robot.hinge_springs.end(),
            [](const auto& x, const auto& y) { return x.nodes < y.nodes; });

  if (model == ShellModel::MidEdge) {
    for (size_t t = 0; t < mesh.triangles.size(); ++t) {
      const auto& tri = mesh.triangles[t];
      TriangleSpring s;
      s.triangle = static_cast<int>(t);
      s.nodes = tri;
      s.edges = robot.triangle_edges[t];
      for (int k = 0; k < 3; ++k) {
        const Edge& ed = robot.edges[s.edges[k]];
        const int from = tri[(k + 1) % 3], to = tri[(k + 2) % 3];
        s.signs[k] = (ed.a == from && ed.b == to) ? 1 : -1;
        s.rest_lengths[k] = (mesh.nodes[to] - mesh.nodes[from]).norm();
      }
      s.rest_area = 0.5 * (mesh.nodes[tri[1]] - mesh.nodes[tri[0]])
                              .cross(mesh.nodes[tri[2]] - mesh.nodes[tri[0]])
                              .norm();
      s.stiffness = midedge_stiffness(geometry, material.shell);
      s.poisson = material.shell.poisson_ratio;
      robot.triangle_springs.push_back(s);
    }
  }

  robot.q0 = VecX::Zero(dofs.total_dofs);
  for (int i = 0; i < n_nodes; ++i) robot.q0.segment<3>(3 * i) = mesh.nodes[i];
  robot.mass = compute_lumped_mass(robot);

  // rest state = input state
  const FrameSet frames = init_reference_frames(robot, robot.q0);
  for (auto& s : robot.bend_twist_springs) {
    const Curvature c = rod_curvature(robot, robot.q0, frames, s);
    s.nat_curvature = Vec2(c.kappa1, c.kappa2);
    s.nat_twist = frames.ref_twist[s.id];
  }
  for (auto& h : robot.hinge_springs) h.nat_angle = hinge_angle(robot, robot.q0, h);
  for (auto& s : robot.triangle_springs) s.nat_coeffs = midedge_coefficients(robot, robot.q0, frames, s);
  return robot;
}

}  // namespace rodshell
