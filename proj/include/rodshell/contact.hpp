#pragma once

#include "rodshell/forces.hpp"
#include "rodshell/mesh.hpp"

#include <array>
#include <vector>

namespace rodshell {

enum class PairKind { RodRod, RodShell, ShellShell };
enum class ContactType { None, PP, PE, EE, PT };
enum class Stencil { EdgeEdge, PointTriangle };

const char* to_string(ContactType type);

struct ContactParams {
  bool enabled = false;
  double delta = 1e-4;     // contact distance tolerance
  double mu = 0.0;
  double nu_slip = 1e-3;   // slipping tolerance
  double k_c = 0.0;        // stiffness multiplier, N/m^2
  double margin = -1.0;    // candidate margin; negative means 2 * max speed * dt
  bool friction = false;
  int exclusion_hops = 0;  // also skip pairs whose nodes are this many edges apart

  double k1() const { return 15.0 / delta; }
  double k2() const { return 15.0 / nu_slip; }
};

struct GroundParams {
  bool enabled = false;
  double height = 0.0;  // plane z = height, normal +z
  double mu = 0.0;
};

// Stencil node order: EdgeEdge (p0, p1, q0, q1); PointTriangle (p, t0, t1, t2).
struct ContactPair {
  Stencil stencil = Stencil::EdgeEdge;
  PairKind kind = PairKind::RodRod;
  std::array<int, 4> nodes{};
  double contact_distance = 0.0;  // 2h for this pair kind
};

// Closest-feature classification. `slots` names the stencil slots that play
// (a, b, c, d) in the distance formula of `type`:
//   PP: a, b     PE: edge a-b, point c     EE: edges a-b, c-d
//   PT: triangle a-b-c, point d
// `weight` holds |d Delta / d x| per stencil slot and `side` is +1 for the
// first entity, -1 for the second.
struct Classification {
  ContactType type = ContactType::None;
  double distance = 0.0;
  std::array<int, 4> slots{-1, -1, -1, -1};
  std::array<double, 4> weight{};
  std::array<int, 4> side{1, 1, -1, -1};
  Vec3 point_a = Vec3::Zero(), point_b = Vec3::Zero();  // closest points
};

Classification classify_segments(const Vec3& p0, const Vec3& p1, const Vec3& q0, const Vec3& q1);
Classification classify_point_triangle(const Vec3& p, const Vec3& t0, const Vec3& t1, const Vec3& t2);
Classification classify(const ContactPair& pair, const VecX& q);

// Distance by the closed-form expression of the classified type, with its
// gradient and Hessian over the 12 stencil coordinates.
struct Separation {
  double value = 0.0;
  Eigen::Matrix<double, 12, 1> grad = Eigen::Matrix<double, 12, 1>::Zero();
  Eigen::Matrix<double, 12, 12> hess = Eigen::Matrix<double, 12, 12>::Zero();
};
Separation separation(const std::array<Vec3, 4>& x, const Classification& c);

// Smoothed penalty energy (units m^2) and its first two derivatives in Delta.
struct ContactScalar {
  double energy = 0.0, slope = 0.0, curvature = 0.0;
};
ContactScalar contact_energy(double distance, double contact_distance, double delta);

// Contact and friction of one pair. The contact part is exact energy
// derivatives; friction has no energy and only fills force and Jacobian.
EnergyContribution pair_contact(const ContactPair& pair, const ContactParams& params, const ForceEval& ev,
                                int ndof, bool with_friction);

class ContactModel {
 public:
  ContactModel(const SoftRobot& robot, ContactParams params, GroundParams ground = {});

  const ContactParams& params() const { return params_; }
  const GroundParams& ground() const { return ground_; }

  // Broad phase through a uniform spatial hash; the set stays frozen until the
  // next call.
  void build_candidates(const VecX& q, double margin);
  const std::vector<ContactPair>& candidates() const { return pairs_; }

  // Reference broad phase over all primitive pairs.
  std::vector<ContactPair> all_pairs_bruteforce(const VecX& q, double margin) const;

  // Adds contact, friction and ground terms. Returns the number of active pairs.
  int add(const ForceEval& ev, EnergyContribution& out) const;

  double node_radius(int node) const { return node_radius_[node]; }

 private:
  bool excluded(const std::array<int, 4>& nodes, int split) const;
  std::vector<ContactPair> filter(const VecX& q, double margin,
                                  const std::vector<std::pair<int, int>>& edge_pairs,
                                  const std::vector<std::pair<int, int>>& node_tris) const;

  const SoftRobot& robot_;
  ContactParams params_;
  GroundParams ground_;
  std::vector<bool> shell_node_;
  std::vector<double> node_radius_;
  std::vector<std::vector<int>> near_;  // nodes within exclusion_hops, sorted
  std::vector<ContactPair> pairs_;
};

}  // namespace rodshell
