#pragma once

// Brute-force distance oracles independent of the closed-form classifiers.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>

namespace oracle {

using V = Eigen::Vector3d;

inline double point_segment(const V& p, const V& a, const V& b) {
  const V d = b - a;
  const double t = std::clamp((p - a).dot(d) / d.squaredNorm(), 0.0, 1.0);
  return (p - a - t * d).norm();
}

// Samples the first segment densely, projects each sample onto the second,
// then refines the best bracket by golden-section search (the distance is
// convex along the first segment).
inline double segment_segment(const V& p0, const V& p1, const V& q0, const V& q1, int samples = 2000) {
  auto f = [&](double s) { return point_segment(p0 + s * (p1 - p0), q0, q1); };
  int best = 0;
  double best_d = f(0.0);
  for (int i = 1; i <= samples; ++i) {
    const double d = f(static_cast<double>(i) / samples);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  double lo = std::max(0.0, (best - 1.0) / samples), hi = std::min(1.0, (best + 1.0) / samples);
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 100; ++it) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - g * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + g * (hi - lo);
      f2 = f(x2);
    }
  }
  return std::min({best_d, f1, f2});
}

// Grid search over the collapsed square x(s, t) = a + s ((1 - t)(b - a) + t (c - a)),
// (s, t) in [0, 1]^2, repeatedly zoomed by half around the best sample. Every
// triangle edge is a box edge here, so clamping never cuts the search short.
// The corner at a is degenerate, hence the rotations in point_triangle.
inline double point_triangle_from(const V& p, const V& a, const V& b, const V& c, int grid, int levels) {
  auto at = [&](double s, double t) { return (p - (a + s * ((1.0 - t) * (b - a) + t * (c - a)))).norm(); };
  double s0 = 0.5, t0 = 0.5, span = 1.0;
  double best = INFINITY;  // the first grid holds all three vertices
  for (int level = 0; level < levels; ++level) {
    double bs = s0, bt = t0;
    for (int i = 0; i <= grid; ++i)
      for (int j = 0; j <= grid; ++j) {
        const double s = std::clamp(s0 + span * (static_cast<double>(i) / grid - 0.5), 0.0, 1.0);
        const double t = std::clamp(t0 + span * (static_cast<double>(j) / grid - 0.5), 0.0, 1.0);
        const double d = at(s, t);
        if (d < best) {
          best = d;
          bs = s;
          bt = t;
        }
      }
    s0 = bs;
    t0 = bt;
    span *= 0.5;
  }
  return best;
}

inline double point_triangle(const V& p, const V& a, const V& b, const V& c, int grid = 40, int levels = 48) {
  return std::min({point_triangle_from(p, a, b, c, grid, levels), point_triangle_from(p, b, c, a, grid, levels),
                   point_triangle_from(p, c, a, b, grid, levels)});
}

}  // namespace oracle
