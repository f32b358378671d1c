#include "builders.hpp"
#include "fd.hpp"
#include "rodshell/elastic.hpp"
#include "rodshell/frames.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace rodshell;
using namespace testing_util;

namespace {

constexpr double pi = std::numbers::pi;

Mat3 random_rotation(fd::Rng& rng) {
  return Eigen::AngleAxisd(rng.uniform(-pi, pi), rng.unit()).toRotationMatrix();
}

}  // namespace

TEST(Transport, IdentityAndOrthogonality) {
  fd::Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    const Vec3 a = rng.unit(), b = rng.unit();
    const Vec3 v = (rng.vec3() - a * a.dot(rng.vec3())).normalized();
    const Vec3 d = (v - a * a.dot(v)).normalized();
    EXPECT_LT((parallel_transport(d, a, a) - d).norm(), 1e-14);
    const Vec3 p = parallel_transport(d, a, b);
    EXPECT_NEAR(p.norm(), 1.0, 1e-12);
    EXPECT_NEAR(p.dot(b), 0.0, 1e-12);
    // reverse transport undoes the forward one
    EXPECT_LT((parallel_transport(p, b, a) - d).norm(), 1e-10);
  }
}

TEST(Transport, KnownCases) {
  // rotating x onto y about z leaves z fixed and sends y to -x
  EXPECT_LT((parallel_transport(Vec3::UnitZ(), Vec3::UnitX(), Vec3::UnitY()) - Vec3::UnitZ()).norm(), 1e-15);
  EXPECT_LT((parallel_transport(Vec3::UnitY(), Vec3::UnitX(), Vec3::UnitY()) + Vec3::UnitX()).norm(), 1e-15);
  // antipodal tangents still give a unit vector perpendicular to the target
  const Vec3 p = parallel_transport(Vec3::UnitY(), Vec3::UnitX(), -Vec3::UnitX());
  EXPECT_NEAR(p.norm(), 1.0, 1e-12);
  EXPECT_NEAR(p.dot(Vec3::UnitX()), 0.0, 1e-12);
}

TEST(Frames, OrthonormalOnRandomChains) {
  fd::Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    MeshInput m = straight_chain(8, 1.0);
    for (auto& x : m.nodes) x += 0.08 * rng.vec3();
    const SoftRobot r = build_robot(m, geometry(), material(), ShellModel::Hinge);
    const FrameSet f = init_reference_frames(r, r.q0);
    for (size_t e = 0; e < r.edges.size(); ++e) {
      EXPECT_NEAR(f.d1[e].norm(), 1.0, 1e-12);
      EXPECT_NEAR(f.d1[e].dot(f.t[e]), 0.0, 1e-12);
      EXPECT_LT((f.d2[e] - f.t[e].cross(f.d1[e])).norm(), 1e-14);
    }
    // frames are spread along the chain by space-parallel transport
    for (const auto& s : r.bend_twist_springs) EXPECT_NEAR(f.ref_twist[s.id], 0.0, 1e-12);
  }
}

TEST(Frames, LShapedChain) {
  MeshInput m;
  m.nodes = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(1, 1, 0)};
  m.rod_edges = {{0, 1}, {1, 2}};
  const SoftRobot r = build_robot(m, geometry(), material(), ShellModel::Hinge);
  const FrameSet f = init_reference_frames(r, r.q0);
  // planar bend: the out-of-plane director is carried unchanged
  const Vec3 z = Vec3::UnitZ();
  EXPECT_NEAR(std::abs(f.d1[0].dot(z)) + std::abs(f.d2[0].dot(z)), 1.0, 1e-12);
  if (std::abs(f.d1[0].dot(z)) > 0.5) EXPECT_LT((f.d1[1] - f.d1[0]).norm(), 1e-12);
  else EXPECT_LT((f.d2[1] - f.d2[0]).norm(), 1e-12);
  EXPECT_NEAR(f.ref_twist[0], 0.0, 1e-14);
  const Curvature c = rod_curvature(r, r.q0, f, r.bend_twist_springs[0]);
  EXPECT_LT((c.kb - Vec3(0, 0, 2)).norm(), 1e-12);
}

TEST(Frames, RigidRotationPreservesReferenceTwist) {
  fd::Rng rng(3);
  for (int trial = 0; trial < 1000; ++trial) {
    MeshInput m;
    m.nodes = {Vec3::Zero(), Vec3(1, 0, 0), Vec3(1.2, 0, 0) + 0.9 * rng.unit(), Vec3(0, 1, 0)};
    m.rod_edges = {{0, 1}, {1, 2}, {3, 1}};
    const SoftRobot r = build_robot(m, geometry(), material(), ShellModel::Hinge);
    const FrameSet f = init_reference_frames(r, r.q0);
    const Mat3 R = random_rotation(rng);
    FrameSet g = f;
    for (auto* set : {&g.d1, &g.d2, &g.t})
      for (auto& v : *set) v = R * v;
    for (const auto& s : r.bend_twist_springs)
      EXPECT_NEAR(compute_reference_twist(r, s, g, f.ref_twist[s.id]), f.ref_twist[s.id], 1e-12);
  }
}

// Reseeding frames on a rotated copy changes each d1 by a gauge rotation about
// its tangent; the twist measured against the matching natural twist must not.
TEST(Frames, ReseededRotatedRobotIsTwistFree) {
  fd::Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    MeshInput m;
    m.nodes = {Vec3::Zero(), Vec3(1, 0, 0), Vec3(1.2, 0, 0) + 0.9 * rng.unit(), Vec3(0, 1, 0)};
    m.rod_edges = {{0, 1}, {1, 2}, {3, 1}};
    const Mat3 R = random_rotation(rng);
    for (auto& x : m.nodes) x = R * x;
    const SoftRobot r = build_robot(m, geometry(), material(), ShellModel::Hinge);
    const FrameSet f = init_reference_frames(r, r.q0);
    const StrainFields s = measure_strains(r, r.q0, f);
    for (const auto& sp : r.bend_twist_springs) {
      EXPECT_NEAR(s.twist[sp.id], sp.nat_twist, 1e-12);
      EXPECT_LT((s.bend[sp.id] - sp.nat_curvature).norm(), 1e-12);
    }
  }
}

TEST(Frames, TwistOfQuarterTurn) {
  const SoftRobot r = build_robot(straight_chain(3, 1.0), geometry(), material(), ShellModel::Hinge);
  const FrameSet f = init_reference_frames(r, r.q0);
  VecX q = r.q0;
  q[r.dofs.twist_offset[1]] = pi / 4;
  const StrainFields s = measure_strains(r, q, f);
  EXPECT_NEAR(s.twist[0], pi / 4, 1e-14);
  EXPECT_NEAR(s.bend[0].norm(), 0.0, 1e-14);
}

TEST(Frames, UnwrapPicksNearestBranch) {
  EXPECT_NEAR(unwrap_angle(3.1, -3.1), 3.1 - 2 * pi, 1e-15);
  EXPECT_NEAR(unwrap_angle(-3.1, 3.1), -3.1 + 2 * pi, 1e-15);
  EXPECT_NEAR(unwrap_angle(0.5, 20.0), 0.5 + 6 * pi, 1e-13);
  EXPECT_DOUBLE_EQ(unwrap_angle(0.5, 0.4), 0.5);
}

// Sweeping the second edge around a cone about the first one accumulates a
// reference twist equal to the enclosed solid angle, which exceeds 2 pi for
// wide cones. Only continuous unwrapping across steps recovers it.
TEST(Frames, ReferenceTwistAccumulatesPastTwoPi) {
  const double alpha = 2.0 * pi / 3.0;
  auto second = [&](double phi) -> Vec3 {
    return Vec3(1, 0, 0) + Vec3(std::cos(alpha), std::sin(alpha) * std::cos(phi), std::sin(alpha) * std::sin(phi));
  };
  MeshInput m;
  m.nodes = {Vec3::Zero(), Vec3(1, 0, 0), second(0.0)};
  m.rod_edges = {{0, 1}, {1, 2}};
  const SoftRobot r = build_robot(m, geometry(), material(), ShellModel::Hinge);
  FrameSet f = init_reference_frames(r, r.q0);
  const double start = f.ref_twist[0];
  const int steps = 4000;
  VecX q = r.q0;
  for (int k = 1; k <= steps; ++k) {
    q.segment<3>(6) = second(2.0 * pi * k / steps);
    f = update_frames_after_step(r, f, q);
  }
  const double solid = 2.0 * pi * (1.0 - std::cos(alpha));
  EXPECT_GT(solid, 2 * pi);
  EXPECT_NEAR(std::abs(f.ref_twist[0] - start), solid, 1e-3);
}

TEST(Frames, TimeTransportKeepsFramesAdapted) {
  fd::Rng rng(4);
  MeshInput m = straight_chain(6, 1.0);
  for (auto& x : m.nodes) x += 0.05 * rng.vec3();
  const SoftRobot r = build_robot(m, geometry(), material(), ShellModel::Hinge);
  FrameSet f = init_reference_frames(r, r.q0);
  VecX q = r.q0;
  for (int step = 0; step < 500; ++step) {
    for (int i = 0; i < r.n_nodes(); ++i) q.segment<3>(3 * i) += 0.01 * rng.vec3();
    f = update_frames_after_step(r, f, q);
    for (size_t e = 0; e < r.edges.size(); ++e) {
      ASSERT_NEAR(f.d1[e].norm(), 1.0, 1e-12);
      ASSERT_NEAR(f.d1[e].dot(f.t[e]), 0.0, 1e-12);
    }
  }
}

TEST(Frames, MidedgeTauIsPerpendicularToEdge) {
  const SoftRobot r = build_robot(plate(3, 3, 1, 1), geometry(), material(), ShellModel::MidEdge);
  const FrameSet f = init_reference_frames(r, r.q0);
  for (size_t e = 0; e < r.edges.size(); ++e) {
    EXPECT_NEAR(f.tau0[e].norm(), 1.0, 1e-12);
    EXPECT_NEAR(f.tau0[e].dot(f.t[e]), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(f.n_avg[e].z()), 1.0, 1e-12);
  }
}
