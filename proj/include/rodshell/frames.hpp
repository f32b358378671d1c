#pragma once

#include "rodshell/autodiff.hpp"
#include "rodshell/mesh.hpp"

namespace rodshell {

// Reference frames live on every edge (only twist-carrying edges use d1/d2).
// Reference twist is per bend-twist spring and kept unwrapped. n_avg and tau0
// are per edge and only filled for shell edges.
struct FrameSet {
  std::vector<Vec3> d1, d2, t;
  std::vector<double> ref_twist;
  std::vector<Vec3> n_avg, tau0;
};

// Minimal rotation carrying unit vector `from` onto unit vector `to`, applied
// to v. Nearly antipodal tangents go through an intermediate perpendicular.
template <class T>
V3<T> transport(const V3<T>& v, const V3<T>& from, const V3<T>& to) {
  const T c = dot(from, to);
  if (value(c) < -1.0 + 1e-6) {
    const Eigen::Vector3d f = values(from);
    int axis = 0;
    for (int k = 1; k < 3; ++k)
      if (std::abs(f[k]) < std::abs(f[axis])) axis = k;
    V3<T> ax(0.0, 0.0, 0.0);
    if (axis == 0) ax.x = 1.0;
    if (axis == 1) ax.y = 1.0;
    if (axis == 2) ax.z = 1.0;
    const V3<T> mid = normalized(ax - from * dot(ax, from));
    return transport(transport(v, from, mid), mid, to);
  }
  const V3<T> k = cross(from, to);
  return v + cross(k, v) + cross(k, cross(k, v)) / (1.0 + c);
}

Vec3 parallel_transport(const Vec3& v, const Vec3& t_from, const Vec3& t_to);

void material_frame(const Vec3& d1, const Vec3& d2, double theta, Vec3& m1, Vec3& m2);

// Returns raw shifted by the multiple of 2*pi that brings it closest to previous.
double unwrap_angle(double raw, double previous);

// Signed angle about `axis` that rotates a onto b (a, b perpendicular to axis).
double signed_angle(const Vec3& a, const Vec3& b, const Vec3& axis);

FrameSet init_reference_frames(const SoftRobot& robot, const VecX& q);

FrameSet update_frames_after_step(const SoftRobot& robot, const FrameSet& old_frames,
                                  const VecX& q_new);

double compute_reference_twist(const SoftRobot& robot, const BendTwistSpring& spring,
                               const FrameSet& frames, double previous);

// Fills n_avg and tau0 for shell edges. Fold-through edges keep the previous
// tau0 and raise a warning.
void update_midedge_edge_frames(const SoftRobot& robot, const VecX& q, FrameSet& frames);

}  // namespace rodshell
