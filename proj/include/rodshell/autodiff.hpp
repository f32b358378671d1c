#pragma once

// Forward-mode differentiation used for the stencil-local strain and contact
// kernels. Jet carries value, gradient and Hessian; Dual carries value and
// gradient. Value arithmetic is performed in the same order as the plain
// double instantiation of a kernel, so values are bitwise identical.

#include <Eigen/Core>

#include <cmath>

namespace rodshell {

template <int N>
struct Jet {
  using Grad = Eigen::Matrix<double, N, 1>;
  using Hess = Eigen::Matrix<double, N, N>;

  double v = 0.0;
  Grad g = Grad::Zero();
  Hess h = Hess::Zero();

  Jet() = default;
  Jet(double value) : v(value) {}  // NOLINT: implicit constant promotion

  static Jet variable(double value, int i) {
    Jet j(value);
    j.g[i] = 1.0;
    return j;
  }
};

template <int N>
struct Dual {
  using Grad = Eigen::Matrix<double, N, 1>;

  double v = 0.0;
  Grad g = Grad::Zero();

  Dual() = default;
  Dual(double value) : v(value) {}  // NOLINT

  static Dual variable(double value, int i) {
    Dual d(value);
    d.g[i] = 1.0;
    return d;
  }
};

inline double value(double x) { return x; }
template <int N> double value(const Jet<N>& x) { return x.v; }
template <int N> double value(const Dual<N>& x) { return x.v; }

// f(a) with first and second derivative at a.v
template <int N>
Jet<N> chain(const Jet<N>& a, double f, double df, double d2f) {
  Jet<N> r;
  r.v = f;
  r.g = df * a.g;
  r.h = df * a.h + d2f * a.g * a.g.transpose();
  return r;
}

template <int N>
Dual<N> chain(const Dual<N>& a, double f, double df, double /*d2f*/ = 0.0) {
  Dual<N> r;
  r.v = f;
  r.g = df * a.g;
  return r;
}

// ---- Jet arithmetic ----

template <int N> Jet<N> operator-(const Jet<N>& a) {
  Jet<N> r;
  r.v = -a.v;
  r.g = -a.g;
  r.h = -a.h;
  return r;
}
template <int N> Jet<N> operator+(const Jet<N>& a, const Jet<N>& b) {
  Jet<N> r;
  r.v = a.v + b.v;
  r.g = a.g + b.g;
  r.h = a.h + b.h;
  return r;
}
template <int N> Jet<N> operator-(const Jet<N>& a, const Jet<N>& b) {
  Jet<N> r;
  r.v = a.v - b.v;
  r.g = a.g - b.g;
  r.h = a.h - b.h;
  return r;
}
template <int N> Jet<N> operator*(const Jet<N>& a, const Jet<N>& b) {
  Jet<N> r;
  r.v = a.v * b.v;
  r.g = b.v * a.g + a.v * b.g;
  const Eigen::Matrix<double, N, N> cross = a.g * b.g.transpose();
  r.h = b.v * a.h + a.v * b.h + cross + cross.transpose();
  return r;
}
template <int N> Jet<N> operator/(const Jet<N>& a, const Jet<N>& b) {
  Jet<N> r;
  r.v = a.v / b.v;
  r.g = (a.g - r.v * b.g) / b.v;
  const Eigen::Matrix<double, N, N> cross = b.g * r.g.transpose();
  r.h = (a.h - r.v * b.h - cross - cross.transpose()) / b.v;
  return r;
}
template <int N> Jet<N> operator+(const Jet<N>& a, double b) { Jet<N> r = a; r.v = a.v + b; return r; }
template <int N> Jet<N> operator+(double a, const Jet<N>& b) { Jet<N> r = b; r.v = a + b.v; return r; }
template <int N> Jet<N> operator-(const Jet<N>& a, double b) { Jet<N> r = a; r.v = a.v - b; return r; }
template <int N> Jet<N> operator-(double a, const Jet<N>& b) { Jet<N> r = -b; r.v = a - b.v; return r; }
template <int N> Jet<N> operator*(const Jet<N>& a, double b) {
  Jet<N> r;
  r.v = a.v * b;
  r.g = a.g * b;
  r.h = a.h * b;
  return r;
}
template <int N> Jet<N> operator*(double a, const Jet<N>& b) {
  Jet<N> r;
  r.v = a * b.v;
  r.g = a * b.g;
  r.h = a * b.h;
  return r;
}
template <int N> Jet<N> operator/(const Jet<N>& a, double b) {
  Jet<N> r;
  r.v = a.v / b;
  r.g = a.g / b;
  r.h = a.h / b;
  return r;
}
template <int N> Jet<N> operator/(double a, const Jet<N>& b) {
  const double r = a / b.v;
  return chain(b, r, -r / b.v, 2.0 * r / (b.v * b.v));
}
template <int N> Jet<N>& operator+=(Jet<N>& a, const Jet<N>& b) { a = a + b; return a; }
template <int N> Jet<N>& operator-=(Jet<N>& a, const Jet<N>& b) { a = a - b; return a; }

template <int N> Jet<N> sqrt(const Jet<N>& a) {
  const double s = std::sqrt(a.v);
  return chain(a, s, 0.5 / s, -0.25 / (s * a.v));
}
template <int N> Jet<N> sin(const Jet<N>& a) {
  const double s = std::sin(a.v), c = std::cos(a.v);
  return chain(a, s, c, -s);
}
template <int N> Jet<N> cos(const Jet<N>& a) {
  const double s = std::sin(a.v), c = std::cos(a.v);
  return chain(a, c, -s, -c);
}
template <int N> Jet<N> exp(const Jet<N>& a) {
  const double e = std::exp(a.v);
  return chain(a, e, e, e);
}
template <int N> Jet<N> log(const Jet<N>& a) {
  return chain(a, std::log(a.v), 1.0 / a.v, -1.0 / (a.v * a.v));
}
template <int N> Jet<N> atan2(const Jet<N>& y, const Jet<N>& x) {
  const double r2 = x.v * x.v + y.v * y.v;
  Jet<N> r;
  r.v = std::atan2(y.v, x.v);
  const double fy = x.v / r2, fx = -y.v / r2;
  const double fyy = -2.0 * x.v * y.v / (r2 * r2);
  const double fxx = -fyy;
  const double fxy = (y.v * y.v - x.v * x.v) / (r2 * r2);
  r.g = fy * y.g + fx * x.g;
  const Eigen::Matrix<double, N, N> cross = y.g * x.g.transpose();
  r.h = fy * y.h + fx * x.h + fyy * y.g * y.g.transpose() +
        fxx * x.g * x.g.transpose() + fxy * (cross + cross.transpose());
  return r;
}

// ---- Dual arithmetic ----

template <int N> Dual<N> operator-(const Dual<N>& a) {
  Dual<N> r;
  r.v = -a.v;
  r.g = -a.g;
  return r;
}
template <int N> Dual<N> operator+(const Dual<N>& a, const Dual<N>& b) {
  Dual<N> r;
  r.v = a.v + b.v;
  r.g = a.g + b.g;
  return r;
}
template <int N> Dual<N> operator-(const Dual<N>& a, const Dual<N>& b) {
  Dual<N> r;
  r.v = a.v - b.v;
  r.g = a.g - b.g;
  return r;
}
template <int N> Dual<N> operator*(const Dual<N>& a, const Dual<N>& b) {
  Dual<N> r;
  r.v = a.v * b.v;
  r.g = b.v * a.g + a.v * b.g;
  return r;
}
template <int N> Dual<N> operator/(const Dual<N>& a, const Dual<N>& b) {
  Dual<N> r;
  r.v = a.v / b.v;
  r.g = (a.g - r.v * b.g) / b.v;
  return r;
}
template <int N> Dual<N> operator+(const Dual<N>& a, double b) { Dual<N> r = a; r.v = a.v + b; return r; }
template <int N> Dual<N> operator+(double a, const Dual<N>& b) { Dual<N> r = b; r.v = a + b.v; return r; }
template <int N> Dual<N> operator-(const Dual<N>& a, double b) { Dual<N> r = a; r.v = a.v - b; return r; }
template <int N> Dual<N> operator-(double a, const Dual<N>& b) { Dual<N> r = -b; r.v = a - b.v; return r; }
template <int N> Dual<N> operator*(const Dual<N>& a, double b) {
  Dual<N> r;
  r.v = a.v * b;
  r.g = a.g * b;
  return r;
}
template <int N> Dual<N> operator*(double a, const Dual<N>& b) { return b * a; }
template <int N> Dual<N> operator/(const Dual<N>& a, double b) {
  Dual<N> r;
  r.v = a.v / b;
  r.g = a.g / b;
  return r;
}
template <int N> Dual<N> operator/(double a, const Dual<N>& b) {
  const double r = a / b.v;
  return chain(b, r, -r / b.v);
}
template <int N> Dual<N>& operator+=(Dual<N>& a, const Dual<N>& b) { a = a + b; return a; }
template <int N> Dual<N>& operator-=(Dual<N>& a, const Dual<N>& b) { a = a - b; return a; }

template <int N> Dual<N> sqrt(const Dual<N>& a) {
  const double s = std::sqrt(a.v);
  return chain(a, s, 0.5 / s);
}
template <int N> Dual<N> exp(const Dual<N>& a) {
  const double e = std::exp(a.v);
  return chain(a, e, e);
}
template <int N> Dual<N> log(const Dual<N>& a) { return chain(a, std::log(a.v), 1.0 / a.v); }
template <int N> Dual<N> sin(const Dual<N>& a) { return chain(a, std::sin(a.v), std::cos(a.v)); }
template <int N> Dual<N> cos(const Dual<N>& a) { return chain(a, std::cos(a.v), -std::sin(a.v)); }

// ---- small 3-vector over any scalar ----

template <class T>
struct V3 {
  T x, y, z;

  V3() : x(0.0), y(0.0), z(0.0) {}
  V3(T a, T b, T c) : x(a), y(b), z(c) {}
  template <class Derived>
  static V3 from(const Eigen::MatrixBase<Derived>& v) {
    return V3(T(v[0]), T(v[1]), T(v[2]));
  }

  V3 operator+(const V3& o) const { return V3(x + o.x, y + o.y, z + o.z); }
  V3 operator-(const V3& o) const { return V3(x - o.x, y - o.y, z - o.z); }
  V3 operator-() const { return V3(-x, -y, -z); }
  template <class S> V3 operator*(const S& s) const { return V3(x * s, y * s, z * s); }
  template <class S> V3 operator/(const S& s) const { return V3(x / s, y / s, z / s); }
};

template <class S, class T> V3<T> operator*(const S& s, const V3<T>& v) { return v * s; }

template <class T> T dot(const V3<T>& a, const V3<T>& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
template <class T> V3<T> cross(const V3<T>& a, const V3<T>& b) {
  return V3<T>(a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x);
}
template <class T> T norm(const V3<T>& a) {
  using std::sqrt;
  return sqrt(dot(a, a));
}
template <class T> V3<T> normalized(const V3<T>& a) { return a / norm(a); }

template <class T>
Eigen::Vector3d values(const V3<T>& a) {
  return {value(a.x), value(a.y), value(a.z)};
}

}  // namespace rodshell
