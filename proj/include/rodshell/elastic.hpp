#pragma once

#include "rodshell/frames.hpp"
#include "rodshell/mesh.hpp"

#include <array>

namespace rodshell {

// Stiffness expressions per deformation mode.
double rod_stretch_stiffness(const Geometry& g, const MaterialProps& m);
double shell_stretch_stiffness(const Geometry& g, const MaterialProps& m, double rest_length);
Vec2 rod_bend_stiffness(const Geometry& g, const MaterialProps& m);
double rod_twist_stiffness(const Geometry& g, const MaterialProps& m);
double hinge_stiffness(const Geometry& g, const MaterialProps& m);
double midedge_stiffness(const Geometry& g, const MaterialProps& m);

struct StretchStrain {
  double strain = 0.0;  // |e|/|e_rest| - 1, natural strain not subtracted
  Eigen::Matrix<double, 6, 1> grad;
  Eigen::Matrix<double, 6, 6> hess;
  std::array<int, 6> dofs{};
};
StretchStrain stretch_strain(const SoftRobot& robot, const VecX& q, const StretchSpring& s);

struct Curvature {
  Vec3 kb = Vec3::Zero();
  double kappa1 = 0.0, kappa2 = 0.0;
};
// Material curvatures with the reference frames time-transported from
// `frames` (the committed state) to the tangents of q.
Curvature rod_curvature(const SoftRobot& robot, const VecX& q, const FrameSet& frames,
                        const BendTwistSpring& s);

// Stencil order: x_m (0..2), theta_i (3), x_n (4..6), theta_j (7), x_o (8..10).
struct BendStrain {
  Vec2 strain = Vec2::Zero();
  Eigen::Matrix<double, 11, 2> grad;
  std::array<Eigen::Matrix<double, 11, 11>, 2> hess;
  std::array<int, 11> dofs{};
};
struct TwistStrain {
  double strain = 0.0;
  Eigen::Matrix<double, 11, 1> grad;
  Eigen::Matrix<double, 11, 11> hess;
  std::array<int, 11> dofs{};
};
BendStrain bend_strain(const SoftRobot& robot, const VecX& q, const FrameSet& frames,
                       const BendTwistSpring& s);
TwistStrain twist_strain(const SoftRobot& robot, const VecX& q, const FrameSet& frames,
                         const BendTwistSpring& s);

// Stencil order: x_l, x_m, x_n, x_o.
struct HingeStrain {
  double strain = 0.0;
  Eigen::Matrix<double, 12, 1> grad;
  Eigen::Matrix<double, 12, 12> hess;
  std::array<int, 12> dofs{};
};
double hinge_angle(const SoftRobot& robot, const VecX& q, const HingeSpring& s);
HingeStrain hinge_strain(const SoftRobot& robot, const VecX& q, const HingeSpring& s);

Mat3 midedge_shape_operator(const SoftRobot& robot, const VecX& q, const FrameSet& frames,
                            const TriangleSpring& s);
Vec3 midedge_coefficients(const SoftRobot& robot, const VecX& q, const FrameSet& frames,
                          const TriangleSpring& s);
EnergyContribution midedge_strain_energy(const SoftRobot& robot, const VecX& q,
                                         const FrameSet& frames, const TriangleSpring& s);

struct ElasticEnergies {
  double stretch = 0.0, bend = 0.0, twist = 0.0, hinge = 0.0, midedge = 0.0;
  double total() const { return stretch + bend + twist + hinge + midedge; }
};

// Sum over all springs. With derivatives=false only energy is computed.
EnergyContribution assemble_elastic(const SoftRobot& robot, const VecX& q,
                                    const FrameSet& frames, bool derivatives = true,
                                    int threads = 1, ElasticEnergies* breakdown = nullptr);

// Current strain of every spring, evaluated by the same kernels as the energy.
struct StrainFields {
  std::vector<double> stretch;
  std::vector<Vec2> bend;
  std::vector<double> twist;
  std::vector<double> hinge;
};
StrainFields measure_strains(const SoftRobot& robot, const VecX& q, const FrameSet& frames);

}  // namespace rodshell
