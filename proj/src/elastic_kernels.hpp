#pragma once

// Stencil-local strain kernels, written once over a generic scalar. The
// double instantiation gives measured strains, the Jet instantiation gives
// the exact gradient and Hessian of the same expression.

#include "rodshell/autodiff.hpp"
#include "rodshell/frames.hpp"
#include "rodshell/types.hpp"

#include <cmath>
#include <string>

namespace rodshell::kernels {

// Committed-state data a bend-twist spring needs: stored source tangents and
// d1 of both edges, spring signs, and the last committed reference twist.
struct BendTwistSource {
  Vec3 t0[2];
  Vec3 d10[2];
  int sign[2];
  double prev_twist;
};

template <class T>
struct BendTwistValues {
  V3<T> kb;
  T kappa1, kappa2;
  T twist;  // theta_j - theta_i + reference twist (signs applied)
};

template <class T>
BendTwistValues<T> bend_twist(const V3<T>& xm, const V3<T>& xn, const V3<T>& xo,
                              const T& theta_i, const T& theta_j, const BendTwistSource& src) {
  using std::cos;
  using std::sin;
  using std::atan2;
  const V3<T> e = xn - xm;
  const V3<T> f = xo - xn;
  const T le = norm(e);
  const T lf = norm(f);
  const V3<T> ti = e / le;
  const V3<T> tj = f / lf;

  const double si = src.sign[0], sj = src.sign[1];
  const V3<T> d1i = transport(V3<T>::from(si * src.d10[0]), V3<T>::from(si * src.t0[0]), ti);
  const V3<T> d1j = transport(V3<T>::from(sj * src.d10[1]), V3<T>::from(sj * src.t0[1]), tj);
  const V3<T> d2i = cross(ti, d1i);
  const V3<T> d2j = cross(tj, d1j);

  const T thi = si * theta_i;
  const T thj = sj * theta_j;
  const T ci = cos(thi), sni = sin(thi);
  const T cj = cos(thj), snj = sin(thj);
  const V3<T> m1i = d1i * ci + d2i * sni;
  const V3<T> m2i = d2i * ci - d1i * sni;
  const V3<T> m1j = d1j * cj + d2j * snj;
  const V3<T> m2j = d2j * cj - d1j * snj;

  const T denom = le * lf + dot(e, f);
  if (!(value(denom) > 1e-12 * value(le * lf)))
    throw KinkError("antiparallel edges at bend-twist spring");

  BendTwistValues<T> out;
  out.kb = cross(e, f) * 2.0 / denom;
  out.kappa1 = 0.5 * dot(m2i + m2j, out.kb);
  out.kappa2 = -0.5 * dot(m1i + m1j, out.kb);

  const V3<T> u = transport(d1i, ti, tj);
  const T raw = atan2(dot(cross(u, d1j), tj), dot(u, d1j));
  const double shift = unwrap_angle(value(raw), src.prev_twist) - value(raw);
  out.twist = thj - thi + (raw + shift);
  return out;
}

// Signed dihedral angle at hinge (l, m, n, o).
template <class T>
T hinge_angle(const V3<T>& xl, const V3<T>& xm, const V3<T>& xn, const V3<T>& xo) {
  using std::atan2;
  const V3<T> e = xn - xm;
  const V3<T> n1 = cross(e, xl - xm);
  const V3<T> n2 = cross(xo - xm, e);
  const double scale = value(dot(e, e));
  if (!(value(norm(n1)) > 1e-12 * scale) || !(value(norm(n2)) > 1e-12 * scale))
    throw GeometryError("degenerate triangle at hinge");
  const T s = dot(cross(n1, n2), e) / norm(e);
  const T c = dot(n1, n2);
  return atan2(s, c);
}

struct MidedgeConstants {
  Vec3 tau0[3];  // global per-edge tau0 (stored edge direction)
  int sign[3];
  double rest_area;
  double rest_length[3];
};

// Shape-operator coefficients c_k with Lambda = sum_k c_k t^k (x) t^k, where
// t^k = e^k x n is the (unnormalized) outward edge normal.
template <class T>
void midedge_coeffs(const V3<T> x[3], const T xi[3], const MidedgeConstants& mc, T c[3],
                    V3<T> e[3], V3<T>& n) {
  e[0] = x[2] - x[1];
  e[1] = x[0] - x[2];
  e[2] = x[1] - x[0];
  const V3<T> nn = cross(e[2], x[2] - x[0]);
  const T area2 = norm(nn);
  if (!(value(area2) > 1e-12 * value(dot(e[2], e[2]))))
    throw GeometryError("degenerate triangle in mid-edge spring");
  n = nn / area2;
  for (int k = 0; k < 3; ++k) {
    const V3<T> tau = V3<T>::from(static_cast<double>(mc.sign[k]) * mc.tau0[k]);
    const T len = norm(e[k]);
    const T tdot = dot(cross(e[k], n), tau) / len;
    if (!(std::abs(value(tdot)) > 1e-10))
      throw ConditioningError("edge normal nearly orthogonal to tau0 in mid-edge spring");
    c[k] = (static_cast<double>(mc.sign[k]) * xi[k] - dot(n, tau)) /
           (tdot * (mc.rest_area * mc.rest_length[k]));
  }
}

// Squared strain (1 - nu) Tr(dL^2) + nu (Tr dL)^2 for dL = sum (c - cbar) t t^T.
template <class T>
T midedge_strain_sq(const T c[3], const Vec3& cbar, const V3<T> e[3], double nu) {
  T dc[3];
  for (int k = 0; k < 3; ++k) dc[k] = c[k] - cbar[k];
  T g[3][3];
  for (int k = 0; k < 3; ++k)
    for (int l = 0; l < 3; ++l) g[k][l] = dot(e[k], e[l]);
  T tr1 = dc[0] * g[0][0] + dc[1] * g[1][1] + dc[2] * g[2][2];
  T tr2(0.0);
  for (int k = 0; k < 3; ++k)
    for (int l = 0; l < 3; ++l) tr2 = tr2 + dc[k] * dc[l] * (g[k][l] * g[k][l]);
  return (1.0 - nu) * tr2 + nu * (tr1 * tr1);
}

}  // namespace rodshell::kernels
