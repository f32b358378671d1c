#pragma once

#include "rodshell/types.hpp"

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

namespace rodshell {

enum class ShellModel { Hinge, MidEdge };
enum class EdgeKind { Rod, Shell };

struct MeshInput {
  std::vector<Vec3> nodes;
  std::vector<std::array<int, 2>> rod_edges;
  std::vector<std::array<int, 3>> triangles;
};

// Plain-text mesh format:
//   *nodes       one "x y z" per line
//   *edges       one "i j" per line (rod edges)
//   *triangles   one "i j k" per line
// Indices are zero-based, '#' starts a comment, blank lines are ignored.
MeshInput parse_mesh(std::istream& in, const std::string& source = "<mesh>");
MeshInput read_mesh_file(const std::string& path);
void write_mesh(std::ostream& out, const MeshInput& mesh);
void write_mesh_file(const std::string& path, const MeshInput& mesh);

struct Geometry {
  double rod_radius = 0.0;
  double shell_thickness = 0.0;
};

struct MaterialProps {
  double density = 0.0;
  double youngs_modulus = 0.0;
  double poisson_ratio = 0.5;

  double shear_modulus() const { return youngs_modulus / (2.0 * (1.0 + poisson_ratio)); }
};

struct Material {
  MaterialProps rod;
  MaterialProps shell;
};

struct Edge {
  int a = -1, b = -1;
  EdgeKind kind = EdgeKind::Rod;
};

struct DofLayout {
  int n_nodes = 0;
  int n_rod_edges = 0;
  int n_shell_edges = 0;
  int total_dofs = 0;
  std::vector<int> twist_offset;    // per edge, -1 when the edge has no theta
  std::vector<int> midedge_offset;  // per edge, -1 when the edge has no xi

  int node_dof(int node) const { return 3 * node; }
};

struct StretchSpring {
  int node_a = -1, node_b = -1;
  int edge = -1;
  double rest_length = 0.0;
  double stiffness = 0.0;
  double nat_strain = 0.0;
  double inc_strain = 0.0;  // added to nat_strain at the start of every step
};

// Nodes (m, n, o); edge i joins m-n, edge j joins n-o. sign_i is +1 when the
// stored edge i runs m->n, sign_j is +1 when the stored edge j runs n->o.
struct BendTwistSpring {
  int id = -1;  // position in SoftRobot::bend_twist_springs
  std::array<int, 3> nodes{};
  std::array<int, 2> edges{};
  std::array<int, 2> signs{1, 1};
  Vec2 nat_curvature = Vec2::Zero();
  double nat_twist = 0.0;
  double voronoi_length = 0.0;
  Vec2 bend_stiffness = Vec2::Zero();
  double twist_stiffness = 0.0;
  Vec2 inc_curvature = Vec2::Zero();
  double inc_twist = 0.0;
};

// Nodes (l, m, n, o): (m, n) is the hinge edge, l and o the opposite apexes.
struct HingeSpring {
  std::array<int, 4> nodes{};
  int edge = -1;
  double nat_angle = 0.0;
  double stiffness = 0.0;
};

// Edge k is opposite vertex k. sign k is +1 when the triangle traverses edge k
// in its stored direction. Natural shape operator is kept as coefficients of
// t^k (x) t^k in the current edge-normal basis.
struct TriangleSpring {
  int triangle = -1;
  std::array<int, 3> nodes{};
  std::array<int, 3> edges{};
  std::array<int, 3> signs{1, 1, 1};
  double rest_area = 0.0;
  std::array<double, 3> rest_lengths{};
  Vec3 nat_coeffs = Vec3::Zero();
  double stiffness = 0.0;
  double poisson = 0.0;
};

struct SoftRobot {
  MeshInput mesh;
  Geometry geometry;
  Material material;
  ShellModel shell_model = ShellModel::Hinge;

  std::vector<Edge> edges;                       // rod edges first, then shell edges
  std::vector<std::vector<int>> edge_triangles;  // triangles adjacent to each edge
  std::vector<std::array<int, 3>> triangle_edges;
  std::vector<int> joint_nodes;
  std::vector<int> promoted_edges;
  DofLayout dofs;

  std::vector<StretchSpring> stretch_springs;
  std::vector<BendTwistSpring> bend_twist_springs;
  std::vector<HingeSpring> hinge_springs;
  std::vector<TriangleSpring> triangle_springs;

  VecX mass;
  VecX q0;

  int n_nodes() const { return dofs.n_nodes; }
  int ndof() const { return dofs.total_dofs; }
  Vec3 node(const VecX& q, int i) const { return q.segment<3>(3 * i); }
  double rod_area() const;
  double rod_inertia() const;  // I1 = I2
  double rod_polar() const;    // J
  double total_mass() const;   // analytic rho A L + rho h A over the mesh
};

SoftRobot build_robot(const MeshInput& mesh, const Geometry& geometry,
                      const Material& material, ShellModel model);

void validate_mesh(const MeshInput& mesh);

std::vector<BendTwistSpring> derive_bend_twist_springs(const std::vector<Edge>& edges,
                                                       const std::vector<int>& twist_edges,
                                                       int n_nodes);

struct JointInfo {
  std::vector<int> joint_nodes;
  std::vector<int> promoted_edges;
};
JointInfo classify_joints(const MeshInput& mesh, const std::vector<Edge>& edges);

VecX compute_lumped_mass(const SoftRobot& robot);

}  // namespace rodshell
