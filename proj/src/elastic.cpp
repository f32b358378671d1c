#include "rodshell/elastic.hpp"

#include "elastic_kernels.hpp"
#include "parallel.hpp"

#include <cmath>
#include <numbers>

namespace rodshell {
namespace {

template <int N>
struct Local {
  double energy = 0.0;
  double part[2] = {0.0, 0.0};
  Eigen::Matrix<double, N, 1> grad = Eigen::Matrix<double, N, 1>::Zero();
  Eigen::Matrix<double, N, N> hess = Eigen::Matrix<double, N, N>::Zero();
  std::array<int, N> dofs{};
};

template <int N>
void scatter(const Local<N>& l, EnergyContribution& out, bool derivatives) {
  out.energy += l.energy;
  if (!derivatives) return;
  for (int a = 0; a < N; ++a) {
    if (l.dofs[a] < 0) continue;
    out.force[l.dofs[a]] -= l.grad[a];
    for (int b = 0; b < N; ++b)
      if (l.dofs[b] >= 0 && l.hess(a, b) != 0.0)
        out.jacobian.emplace_back(l.dofs[a], l.dofs[b], -l.hess(a, b));
  }
}

std::array<int, 11> bend_dofs(const SoftRobot& r, const BendTwistSpring& s) {
  const int m = 3 * s.nodes[0], n = 3 * s.nodes[1], o = 3 * s.nodes[2];
  return {m, m + 1, m + 2, r.dofs.twist_offset[s.edges[0]], n, n + 1, n + 2,
          r.dofs.twist_offset[s.edges[1]], o, o + 1, o + 2};
}

kernels::BendTwistSource bend_source(const FrameSet& f, const BendTwistSpring& s) {
  kernels::BendTwistSource src;
  for (int k = 0; k < 2; ++k) {
    src.t0[k] = f.t[s.edges[k]];
    src.d10[k] = f.d1[s.edges[k]];
    src.sign[k] = s.signs[k];
  }
  src.prev_twist = f.ref_twist[s.id];
  return src;
}

using J11 = Jet<11>;
using J12 = Jet<12>;

kernels::BendTwistValues<J11> bend_twist_jet(const SoftRobot& r, const VecX& q, const FrameSet& f,
                                             const BendTwistSpring& s, std::array<int, 11>& dofs) {
  dofs = bend_dofs(r, s);
  J11 v[11];
  for (int k = 0; k < 11; ++k) v[k] = J11::variable(q[dofs[k]], k);
  try {
    return kernels::bend_twist<J11>(V3<J11>(v[0], v[1], v[2]), V3<J11>(v[4], v[5], v[6]),
                                    V3<J11>(v[8], v[9], v[10]), v[3], v[7], bend_source(f, s));
  } catch (const KinkError& e) {
    throw KinkError(std::string(e.what()) + " " + std::to_string(s.id));
  }
}

kernels::BendTwistValues<double> bend_twist_value(const SoftRobot& r, const VecX& q,
                                                  const FrameSet& f, const BendTwistSpring& s) {
  const auto d = bend_dofs(r, s);
  auto p = [&](int k) { return V3<double>(q[d[k]], q[d[k + 1]], q[d[k + 2]]); };
  try {
    return kernels::bend_twist<double>(p(0), p(4), p(8), q[d[3]], q[d[7]], bend_source(f, s));
  } catch (const KinkError& e) {
    throw KinkError(std::string(e.what()) + " " + std::to_string(s.id));
  }
}

std::array<int, 12> hinge_dofs(const HingeSpring& s) {
  std::array<int, 12> d{};
  for (int k = 0; k < 4; ++k)
    for (int c = 0; c < 3; ++c) d[3 * k + c] = 3 * s.nodes[k] + c;
  return d;
}

std::array<int, 12> midedge_dofs(const SoftRobot& r, const TriangleSpring& s) {
  std::array<int, 12> d{};
  for (int k = 0; k < 3; ++k)
    for (int c = 0; c < 3; ++c) d[3 * k + c] = 3 * s.nodes[k] + c;
  for (int k = 0; k < 3; ++k) d[9 + k] = r.dofs.midedge_offset[s.edges[k]];
  return d;
}

kernels::MidedgeConstants midedge_constants(const FrameSet& f, const TriangleSpring& s) {
  kernels::MidedgeConstants mc;
  for (int k = 0; k < 3; ++k) {
    mc.tau0[k] = f.tau0[s.edges[k]];
    mc.sign[k] = s.signs[k];
    mc.rest_length[k] = s.rest_lengths[k];
  }
  mc.rest_area = s.rest_area;
  return mc;
}

template <class T>
void midedge_eval(const SoftRobot& r, const VecX& q, const FrameSet& f, const TriangleSpring& s,
                  T c[3], V3<T> e[3], T* energy) {
  const auto d = midedge_dofs(r, s);
  T v[12];
  for (int k = 0; k < 12; ++k) {
    if constexpr (std::is_same_v<T, double>) v[k] = q[d[k]];
    else v[k] = T::variable(q[d[k]], k);
  }
  const V3<T> x[3] = {V3<T>(v[0], v[1], v[2]), V3<T>(v[3], v[4], v[5]), V3<T>(v[6], v[7], v[8])};
  const T xi[3] = {v[9], v[10], v[11]};
  V3<T> n;
  try {
    kernels::midedge_coeffs(x, xi, midedge_constants(f, s), c, e, n);
  } catch (const ConditioningError& err) {
    throw ConditioningError(std::string(err.what()) + " (triangle " + std::to_string(s.triangle) + ")");
  } catch (const GeometryError& err) {
    throw GeometryError(std::string(err.what()) + " (triangle " + std::to_string(s.triangle) + ")");
  }
  if (energy) *energy = (s.stiffness * s.rest_area) * kernels::midedge_strain_sq(c, s.nat_coeffs, e, s.poisson);
}

Local<6> stretch_local(const SoftRobot& r, const VecX& q, const StretchSpring& s, bool derivs) {
  Local<6> l;
  const double len = s.rest_length;
  if (!derivs) {
    const double eps = (r.node(q, s.node_b) - r.node(q, s.node_a)).norm() / len - 1.0 - s.nat_strain;
    l.energy = 0.5 * s.stiffness * eps * eps * len;
    return l;
  }
  const StretchStrain st = stretch_strain(r, q, s);
  const double eps = st.strain - s.nat_strain;
  const double k = s.stiffness * len;
  l.energy = 0.5 * k * eps * eps;
  l.grad = k * eps * st.grad;
  l.hess = k * (eps * st.hess + st.grad * st.grad.transpose());
  l.dofs = st.dofs;
  return l;
}

Local<11> bend_twist_local(const SoftRobot& r, const VecX& q, const FrameSet& f,
                           const BendTwistSpring& s, bool derivs) {
  Local<11> l;
  const double dl = s.voronoi_length;
  if (!derivs) {
    const auto v = bend_twist_value(r, q, f, s);
    const double e1 = v.kappa1 - s.nat_curvature[0], e2 = v.kappa2 - s.nat_curvature[1];
    const double et = v.twist - s.nat_twist;
    l.part[0] = 0.5 * (s.bend_stiffness[0] * e1 * e1 + s.bend_stiffness[1] * e2 * e2) / dl;
    l.part[1] = 0.5 * s.twist_stiffness * et * et / dl;
    l.energy = l.part[0] + l.part[1];
    return l;
  }
  const auto v = bend_twist_jet(r, q, f, s, l.dofs);
  const J11* kap[2] = {&v.kappa1, &v.kappa2};
  for (int k = 0; k < 2; ++k) {
    const double eps = kap[k]->v - s.nat_curvature[k];
    const double kk = s.bend_stiffness[k] / dl;
    l.part[0] += 0.5 * kk * eps * eps;
    l.grad += kk * eps * kap[k]->g;
    l.hess += kk * (eps * kap[k]->h + kap[k]->g * kap[k]->g.transpose());
  }
  const double et = v.twist.v - s.nat_twist;
  const double kt = s.twist_stiffness / dl;
  l.part[1] = 0.5 * kt * et * et;
  l.grad += kt * et * v.twist.g;
  l.hess += kt * (et * v.twist.h + v.twist.g * v.twist.g.transpose());
  l.energy = l.part[0] + l.part[1];
  return l;
}

Local<12> hinge_local(const SoftRobot& r, const VecX& q, const HingeSpring& s, bool derivs) {
  Local<12> l;
  if (!derivs) {
    const double eps = hinge_angle(r, q, s) - s.nat_angle;
    l.energy = 0.5 * s.stiffness * eps * eps;
    return l;
  }
  const HingeStrain h = hinge_strain(r, q, s);
  l.energy = 0.5 * s.stiffness * h.strain * h.strain;
  l.grad = s.stiffness * h.strain * h.grad;
  l.hess = s.stiffness * (h.strain * h.hess + h.grad * h.grad.transpose());
  l.dofs = h.dofs;
  return l;
}

Local<12> midedge_local(const SoftRobot& r, const VecX& q, const FrameSet& f, const TriangleSpring& s,
                        bool derivs) {
  Local<12> l;
  if (!derivs) {
    double c[3];
    V3<double> e[3];
    midedge_eval<double>(r, q, f, s, c, e, &l.energy);
    return l;
  }
  J12 c[3];
  V3<J12> e[3];
  J12 energy;
  midedge_eval<J12>(r, q, f, s, c, e, &energy);
  l.energy = energy.v;
  l.grad = energy.g;
  l.hess = energy.h;
  l.dofs = midedge_dofs(r, s);
  return l;
}

}  // namespace

double rod_stretch_stiffness(const Geometry& g, const MaterialProps& m) {
  return m.youngs_modulus * std::numbers::pi * g.rod_radius * g.rod_radius;
}
double shell_stretch_stiffness(const Geometry& g, const MaterialProps& m, double rest_length) {
  return std::sqrt(3.0) / 4.0 * m.youngs_modulus * g.shell_thickness * rest_length;
}
Vec2 rod_bend_stiffness(const Geometry& g, const MaterialProps& m) {
  const double r = g.rod_radius;
  const double i = std::numbers::pi * r * r * r * r / 4.0;
  return Vec2(m.youngs_modulus * i, m.youngs_modulus * i);
}
double rod_twist_stiffness(const Geometry& g, const MaterialProps& m) {
  const double r = g.rod_radius;
  return m.shear_modulus() * std::numbers::pi * r * r * r * r / 2.0;
}
double hinge_stiffness(const Geometry& g, const MaterialProps& m) {
  const double h = g.shell_thickness;
  return m.youngs_modulus * h * h * h / 12.0 / std::sqrt(3.0);
}
double midedge_stiffness(const Geometry& g, const MaterialProps& m) {
  const double h = g.shell_thickness, nu = m.poisson_ratio;
  return m.youngs_modulus * h * h * h / (24.0 * (1.0 - nu * nu));
}

StretchStrain stretch_strain(const SoftRobot& robot, const VecX& q, const StretchSpring& s) {
  const Vec3 e = robot.node(q, s.node_b) - robot.node(q, s.node_a);
  const double len = e.norm();
  if (!(len > 1e-12))
    throw GeometryError("stretch spring on edge " + std::to_string(s.edge) + " collapsed to zero length");
  const Vec3 t = e / len;
  StretchStrain out;
  out.strain = len / s.rest_length - 1.0;
  const Vec3 g = t / s.rest_length;
  const Mat3 h = (Mat3::Identity() - t * t.transpose()) / (len * s.rest_length);
  out.grad << -g, g;
  out.hess << h, -h, -h, h;
  for (int c = 0; c < 3; ++c) {
    out.dofs[c] = 3 * s.node_a + c;
    out.dofs[3 + c] = 3 * s.node_b + c;
  }
  return out;
}

Curvature rod_curvature(const SoftRobot& robot, const VecX& q, const FrameSet& frames,
                        const BendTwistSpring& s) {
  const auto v = bend_twist_value(robot, q, frames, s);
  Curvature c;
  c.kb = values(v.kb);
  c.kappa1 = v.kappa1;
  c.kappa2 = v.kappa2;
  return c;
}

BendStrain bend_strain(const SoftRobot& robot, const VecX& q, const FrameSet& frames,
                       const BendTwistSpring& s) {
  BendStrain out;
  const auto v = bend_twist_jet(robot, q, frames, s, out.dofs);
  out.strain = Vec2(v.kappa1.v - s.nat_curvature[0], v.kappa2.v - s.nat_curvature[1]);
  out.grad.col(0) = v.kappa1.g;
  out.grad.col(1) = v.kappa2.g;
  out.hess[0] = v.kappa1.h;
  out.hess[1] = v.kappa2.h;
  return out;
}

TwistStrain twist_strain(const SoftRobot& robot, const VecX& q, const FrameSet& frames,
                         const BendTwistSpring& s) {
  TwistStrain out;
  const auto v = bend_twist_jet(robot, q, frames, s, out.dofs);
  out.strain = v.twist.v - s.nat_twist;
  out.grad = v.twist.g;
  out.hess = v.twist.h;
  return out;
}

double hinge_angle(const SoftRobot& robot, const VecX& q, const HingeSpring& s) {
  auto p = [&](int k) { return V3<double>::from(robot.node(q, s.nodes[k])); };
  try {
    return kernels::hinge_angle<double>(p(0), p(1), p(2), p(3));
  } catch (const GeometryError& e) {
    throw GeometryError(std::string(e.what()) + " on edge " + std::to_string(s.edge));
  }
}

HingeStrain hinge_strain(const SoftRobot&, const VecX& q, const HingeSpring& s) {
  HingeStrain out;
  out.dofs = hinge_dofs(s);
  J12 v[12];
  for (int k = 0; k < 12; ++k) v[k] = J12::variable(q[out.dofs[k]], k);
  auto p = [&](int k) { return V3<J12>(v[3 * k], v[3 * k + 1], v[3 * k + 2]); };
  J12 phi;
  try {
    phi = kernels::hinge_angle<J12>(p(0), p(1), p(2), p(3));
  } catch (const GeometryError& e) {
    throw GeometryError(std::string(e.what()) + " on edge " + std::to_string(s.edge));
  }
  out.strain = phi.v - s.nat_angle;
  out.grad = phi.g;
  out.hess = phi.h;
  return out;
}

Vec3 midedge_coefficients(const SoftRobot& robot, const VecX& q, const FrameSet& frames,
                          const TriangleSpring& s) {
  double c[3];
  V3<double> e[3];
  midedge_eval<double>(robot, q, frames, s, c, e, nullptr);
  return Vec3(c[0], c[1], c[2]);
}

Mat3 midedge_shape_operator(const SoftRobot& robot, const VecX& q, const FrameSet& frames,
                            const TriangleSpring& s) {
  double c[3];
  V3<double> e[3];
  midedge_eval<double>(robot, q, frames, s, c, e, nullptr);
  const Vec3 x0 = robot.node(q, s.nodes[0]);
  const Vec3 n = (robot.node(q, s.nodes[1]) - x0).cross(robot.node(q, s.nodes[2]) - x0).normalized();
  Mat3 lambda = Mat3::Zero();
  for (int k = 0; k < 3; ++k) {
    const Vec3 t = values(e[k]).cross(n);
    lambda += c[k] * t * t.transpose();
  }
  return lambda;
}

EnergyContribution midedge_strain_energy(const SoftRobot& robot, const VecX& q,
                                         const FrameSet& frames, const TriangleSpring& s) {
  EnergyContribution out(robot.ndof());
  scatter(midedge_local(robot, q, frames, s, true), out, true);
  return out;
}

EnergyContribution assemble_elastic(const SoftRobot& robot, const VecX& q, const FrameSet& frames,
                                    bool derivatives, int threads, ElasticEnergies* breakdown) {
  EnergyContribution out(robot.ndof());
  ElasticEnergies parts;

  std::vector<Local<6>> st(robot.stretch_springs.size());
  parallel_for(static_cast<int>(st.size()), threads,
               [&](int i) { st[i] = stretch_local(robot, q, robot.stretch_springs[i], derivatives); });
  for (const auto& l : st) {
    parts.stretch += l.energy;
    scatter(l, out, derivatives);
  }

  std::vector<Local<11>> bt(robot.bend_twist_springs.size());
  parallel_for(static_cast<int>(bt.size()), threads, [&](int i) {
    bt[i] = bend_twist_local(robot, q, frames, robot.bend_twist_springs[i], derivatives);
  });
  for (const auto& l : bt) {
    parts.bend += l.part[0];
    parts.twist += l.part[1];
    scatter(l, out, derivatives);
  }

  std::vector<Local<12>> hg(robot.hinge_springs.size());
  parallel_for(static_cast<int>(hg.size()), threads,
               [&](int i) { hg[i] = hinge_local(robot, q, robot.hinge_springs[i], derivatives); });
  for (const auto& l : hg) {
    parts.hinge += l.energy;
    scatter(l, out, derivatives);
  }

  std::vector<Local<12>> me(robot.triangle_springs.size());
  parallel_for(static_cast<int>(me.size()), threads, [&](int i) {
    me[i] = midedge_local(robot, q, frames, robot.triangle_springs[i], derivatives);
  });
  for (const auto& l : me) {
    parts.midedge += l.energy;
    scatter(l, out, derivatives);
  }

  if (breakdown) *breakdown = parts;
  return out;
}

StrainFields measure_strains(const SoftRobot& robot, const VecX& q, const FrameSet& frames) {
  StrainFields f;
  for (const auto& s : robot.stretch_springs)
    f.stretch.push_back((robot.node(q, s.node_b) - robot.node(q, s.node_a)).norm() / s.rest_length - 1.0);
  for (const auto& s : robot.bend_twist_springs) {
    const auto v = bend_twist_value(robot, q, frames, s);
    f.bend.emplace_back(v.kappa1, v.kappa2);
    f.twist.push_back(v.twist);
  }
  for (const auto& h : robot.hinge_springs) f.hinge.push_back(hinge_angle(robot, q, h));
  return f;
}

}  // namespace rodshell
