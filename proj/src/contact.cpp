#include "rodshell/contact.hpp"

#include "rodshell/autodiff.hpp"
#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <unordered_map>

namespace rodshell {
namespace {

constexpr double kSlipEps = 1e-10;

double clamp01(double x) { return std::min(1.0, std::max(0.0, x)); }

// Point-segment closest parameter, clamped.
double segment_param(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 d = b - a;
  return clamp01((p - a).dot(d) / d.squaredNorm());
}

Classification point_feature(const Vec3& p, const Vec3& a, const Vec3& b, int pslot, int aslot, int bslot) {
  Classification c;
  const double t = segment_param(p, a, b);
  c.point_a = p;
  c.point_b = a + t * (b - a);
  c.distance = (c.point_a - c.point_b).norm();
  if (t > 0.0 && t < 1.0) {
    c.type = ContactType::PE;
    c.slots = {aslot, bslot, pslot, -1};
    c.weight[aslot] = 1.0 - t;
    c.weight[bslot] = t;
  } else {
    c.type = ContactType::PP;
    c.slots = {pslot, t == 0.0 ? aslot : bslot, -1, -1};
    c.weight[c.slots[1]] = 1.0;
  }
  c.weight[pslot] = 1.0;
  return c;
}

// Stencil-local distance expression for a classified type. Slots map the
// stencil coordinates onto the formula roles.
template <class T>
T separation_value(ContactType type, const V3<T> x[4], const std::array<int, 4>& s) {
  switch (type) {
    case ContactType::PP:
      return norm(x[s[0]] - x[s[1]]);
    case ContactType::PE: {
      const V3<T> ab = x[s[0]] - x[s[1]];
      return norm(cross(ab, x[s[1]] - x[s[2]])) / norm(ab);
    }
    case ContactType::EE: {
      const V3<T> n = cross(x[s[0]] - x[s[1]], x[s[2]] - x[s[3]]);
      const T proj = dot(x[s[0]] - x[s[2]], n) / norm(n);
      return value(proj) < 0.0 ? -proj : proj;
    }
    case ContactType::PT: {
      const V3<T> n = cross(x[s[1]] - x[s[0]], x[s[2]] - x[s[0]]);
      const T proj = dot(x[s[3]] - x[s[0]], n) / norm(n);
      return value(proj) < 0.0 ? -proj : proj;
    }
    default:
      return T(0.0);
  }
}

// Closest-point weights as smooth functions of the stencil, matching
// |d Delta / d x| of the formula in the interior of each classification.
template <class T>
void closest_weights(ContactType type, const V3<T> x[4], const std::array<int, 4>& s, T w[4]) {
  for (int k = 0; k < 4; ++k) w[k] = T(0.0);
  switch (type) {
    case ContactType::PP:
      w[s[0]] = T(1.0);
      w[s[1]] = T(1.0);
      break;
    case ContactType::PE: {
      const V3<T> d = x[s[1]] - x[s[0]];
      const T t = dot(x[s[2]] - x[s[0]], d) / dot(d, d);
      w[s[0]] = 1.0 - t;
      w[s[1]] = t;
      w[s[2]] = T(1.0);
      break;
    }
    case ContactType::EE: {
      const V3<T> d1 = x[s[1]] - x[s[0]], d2 = x[s[3]] - x[s[2]], r = x[s[0]] - x[s[2]];
      const T a = dot(d1, d1), b = dot(d1, d2), c = dot(d1, r), e = dot(d2, d2), f = dot(d2, r);
      const T den = a * e - b * b;
      const T sp = (b * f - c * e) / den;
      const T tp = (a * f - b * c) / den;
      w[s[0]] = 1.0 - sp;
      w[s[1]] = sp;
      w[s[2]] = 1.0 - tp;
      w[s[3]] = tp;
      break;
    }
    case ContactType::PT: {
      const V3<T> v0 = x[s[1]] - x[s[0]], v1 = x[s[2]] - x[s[0]], v2 = x[s[3]] - x[s[0]];
      const T d00 = dot(v0, v0), d01 = dot(v0, v1), d11 = dot(v1, v1);
      const T d20 = dot(v2, v0), d21 = dot(v2, v1);
      const T den = d00 * d11 - d01 * d01;
      const T beta = (d11 * d20 - d01 * d21) / den;
      const T gamma = (d00 * d21 - d01 * d20) / den;
      w[s[0]] = 1.0 - beta - gamma;
      w[s[1]] = beta;
      w[s[2]] = gamma;
      w[s[3]] = T(1.0);
      break;
    }
    default:
      break;
  }
}

// dE/dDelta of the penalty energy as a differentiable expression.
template <class T>
T energy_slope(const T& distance, double contact_distance, double delta) {
  using std::exp;
  using std::log;
  const T x = contact_distance - distance;
  if (value(distance) <= contact_distance - delta) return -2.0 * x;
  if (value(distance) >= contact_distance + delta) return T(0.0);
  const double k1 = 15.0 / delta;
  const T z = k1 * x;
  const T ez = exp(z);
  const T l = log(1.0 + ez) / k1;
  return -2.0 * l * (ez / (1.0 + ez));
}

struct Local {
  bool active = false;
  double energy = 0.0;
  std::array<int, 12> dofs{};
  Eigen::Matrix<double, 12, 1> force = Eigen::Matrix<double, 12, 1>::Zero();
  Eigen::Matrix<double, 12, 12> jac = Eigen::Matrix<double, 12, 12>::Zero();
};

using D12 = Dual<12>;

void add_friction(const Classification& c, const Stencil stencil, const ContactPair& pair,
                  const ContactParams& p, const ForceEval& ev, Local& l) {
  V3<D12> x[4];
  V3<D12> v[4];
  for (int k = 0; k < 4; ++k) {
    D12 xs[3], vs[3];
    for (int a = 0; a < 3; ++a) {
      const int dof = 3 * pair.nodes[k] + a;
      xs[a] = D12(ev.q[dof]);
      xs[a].g[3 * k + a] = ev.dq;
      vs[a] = D12(ev.v[dof]);
      vs[a].g[3 * k + a] = ev.dv;
    }
    x[k] = V3<D12>(xs[0], xs[1], xs[2]);
    v[k] = V3<D12>(vs[0], vs[1], vs[2]);
  }
  const D12 dist = separation_value(c.type, x, c.slots);
  const D12 mag = (-p.k_c) * energy_slope(dist, pair.contact_distance, p.delta);
  if (mag.v <= 0.0) return;
  D12 w[4];
  closest_weights(c.type, x, c.slots, w);
  const std::array<int, 4> side = stencil == Stencil::EdgeEdge ? std::array<int, 4>{1, 1, -1, -1}
                                                               : std::array<int, 4>{1, -1, -1, -1};
  V3<D12> pa(0.0, 0.0, 0.0), pb(0.0, 0.0, 0.0), va(0.0, 0.0, 0.0), vb(0.0, 0.0, 0.0);
  for (int k = 0; k < 4; ++k) {
    if (side[k] > 0) {
      pa = pa + x[k] * w[k];
      va = va + v[k] * w[k];
    } else {
      pb = pb + x[k] * w[k];
      vb = vb + v[k] * w[k];
    }
  }
  const V3<D12> gap = pa - pb;
  if (!(value(norm(gap)) > 1e-14)) return;
  const V3<D12> n = gap / norm(gap);
  const V3<D12> u = va - vb;
  const V3<D12> ut = u - n * dot(u, n);
  const D12 s = sqrt(dot(ut, ut) + kSlipEps * kSlipEps);
  const D12 gamma = 2.0 / (1.0 + exp(-p.k2() * s)) - 1.0;
  const V3<D12> dir = ut / s;
  for (int k = 0; k < 4; ++k) {
    if (w[k].v == 0.0 && w[k].g.isZero()) continue;
    const V3<D12> f = dir * (static_cast<double>(-side[k]) * p.mu * gamma * mag * w[k]);
    const D12 comp[3] = {f.x, f.y, f.z};
    for (int a = 0; a < 3; ++a) {
      l.force[3 * k + a] += comp[a].v;
      l.jac.row(3 * k + a) += comp[a].g.transpose();
    }
  }
}

Local pair_local(const ContactPair& pair, const ContactParams& p, const ForceEval& ev, bool with_friction) {
  Local l;
  for (int k = 0; k < 4; ++k)
    for (int a = 0; a < 3; ++a) l.dofs[3 * k + a] = 3 * pair.nodes[k] + a;
  const Classification c = classify(pair, ev.q);
  if (c.type == ContactType::None) return l;
  if (pair.stencil == Stencil::PointTriangle && c.type != ContactType::PT) return l;
  if (c.distance >= pair.contact_distance + p.delta) return l;

  std::array<Vec3, 4> x;
  for (int k = 0; k < 4; ++k) x[k] = ev.q.segment<3>(3 * pair.nodes[k]);
  const Separation sep = separation(x, c);
  const ContactScalar cs = contact_energy(sep.value, pair.contact_distance, p.delta);
  if (cs.energy == 0.0 && cs.slope == 0.0) return l;
  l.active = true;
  l.energy = p.k_c * cs.energy;
  l.force = -p.k_c * cs.slope * sep.grad;
  l.jac = -p.k_c * ev.dq * (cs.curvature * sep.grad * sep.grad.transpose() + cs.slope * sep.hess);
  if (with_friction && p.mu > 0.0) add_friction(c, pair.stencil, pair, p, ev, l);
  return l;
}

void scatter(const Local& l, EnergyContribution& out) {
  out.energy += l.energy;
  for (int a = 0; a < 12; ++a) {
    out.force[l.dofs[a]] += l.force[a];
    for (int b = 0; b < 12; ++b)
      if (l.jac(a, b) != 0.0) out.jacobian.emplace_back(l.dofs[a], l.dofs[b], l.jac(a, b));
  }
}

struct Box {
  Vec3 lo, hi;
};

Box box_of(const VecX& q, std::initializer_list<int> nodes) {
  Box b{Vec3::Constant(1e300), Vec3::Constant(-1e300)};
  for (int n : nodes) {
    b.lo = b.lo.cwiseMin(q.segment<3>(3 * n));
    b.hi = b.hi.cwiseMax(q.segment<3>(3 * n));
  }
  return b;
}

double box_gap(const Box& a, const Box& b) {
  const Vec3 d = (a.lo - b.hi).cwiseMax(b.lo - a.hi).cwiseMax(0.0);
  return d.norm();
}

struct CellKey {
  long long operator()(long long i, long long j, long long k) const {
    return (i * 73856093LL) ^ (j * 19349663LL) ^ (k * 83492791LL);
  }
};

class SpatialHash {
 public:
  explicit SpatialHash(double cell) : cell_(cell) {}

  void insert(int id, const Box& b) {
    visit(b, 0.0, [&](long long key) { cells_[key].push_back(id); });
  }

  // Ids whose cells overlap b grown by `reach`, possibly with duplicates.
  std::vector<int> query(const Box& b, double reach) const {
    std::vector<int> out;
    visit(b, reach, [&](long long key) {
      auto it = cells_.find(key);
      if (it != cells_.end()) out.insert(out.end(), it->second.begin(), it->second.end());
    });
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

 private:
  template <class Fn>
  void visit(const Box& b, double reach, Fn&& fn) const {
    auto idx = [&](double x) { return static_cast<long long>(std::floor(x / cell_)); };
    const long long i0 = idx(b.lo.x() - reach), i1 = idx(b.hi.x() + reach);
    const long long j0 = idx(b.lo.y() - reach), j1 = idx(b.hi.y() + reach);
    const long long k0 = idx(b.lo.z() - reach), k1 = idx(b.hi.z() + reach);
    for (long long i = i0; i <= i1; ++i)
      for (long long j = j0; j <= j1; ++j)
        for (long long k = k0; k <= k1; ++k) fn(CellKey{}(i, j, k));
  }

  double cell_;
  std::unordered_map<long long, std::vector<int>> cells_;
};

}  // namespace

const char* to_string(ContactType type) {
  switch (type) {
    case ContactType::PP: return "PP";
    case ContactType::PE: return "PE";
    case ContactType::EE: return "EE";
    case ContactType::PT: return "PT";
    default: return "none";
  }
}

Classification classify_segments(const Vec3& p0, const Vec3& p1, const Vec3& q0, const Vec3& q1) {
  const Vec3 d1 = p1 - p0, d2 = q1 - q0, r = p0 - q0;
  const double a = d1.squaredNorm(), e = d2.squaredNorm();
  if (!(a > 1e-24) || !(e > 1e-24)) throw GeometryError("zero-length edge in contact pair");
  const double b = d1.dot(d2), c = d1.dot(r), f = d2.dot(r);
  const double den = a * e - b * b;
  const bool parallel = !(den > 1e-12 * a * e);
  if (parallel) {
    // No unique closest pair: fall back to the best endpoint feature.
    const Classification cand[4] = {point_feature(p0, q0, q1, 0, 2, 3), point_feature(p1, q0, q1, 1, 2, 3),
                                    point_feature(q0, p0, p1, 2, 0, 1), point_feature(q1, p0, p1, 3, 0, 1)};
    int best = 0;
    for (int k = 1; k < 4; ++k)
      if (cand[k].distance < cand[best].distance) best = k;
    Classification out = cand[best];
    if (best >= 2) std::swap(out.point_a, out.point_b);
    return out;
  }
  double s = clamp01((b * f - c * e) / den);
  double t = (b * s + f) / e;
  if (t < 0.0) {
    t = 0.0;
    s = clamp01(-c / a);
  } else if (t > 1.0) {
    t = 1.0;
    s = clamp01((b - c) / a);
  }
  const bool s_in = s > 0.0 && s < 1.0, t_in = t > 0.0 && t < 1.0;
  if (s_in && t_in) {
    Classification out;
    out.type = ContactType::EE;
    out.slots = {0, 1, 2, 3};
    out.weight = {1.0 - s, s, 1.0 - t, t};
    out.point_a = p0 + s * d1;
    out.point_b = q0 + t * d2;
    out.distance = (out.point_a - out.point_b).norm();
    return out;
  }
  if (!s_in && t_in) return point_feature(s == 0.0 ? p0 : p1, q0, q1, s == 0.0 ? 0 : 1, 2, 3);
  if (s_in) {
    Classification out = point_feature(t == 0.0 ? q0 : q1, p0, p1, t == 0.0 ? 2 : 3, 0, 1);
    std::swap(out.point_a, out.point_b);
    return out;
  }
  Classification out;
  out.type = ContactType::PP;
  const int ps = s == 0.0 ? 0 : 1, qs = t == 0.0 ? 2 : 3;
  out.slots = {ps, qs, -1, -1};
  out.weight[ps] = 1.0;
  out.weight[qs] = 1.0;
  out.point_a = ps == 0 ? p0 : p1;
  out.point_b = qs == 2 ? q0 : q1;
  out.distance = (out.point_a - out.point_b).norm();
  return out;
}

Classification classify_point_triangle(const Vec3& p, const Vec3& t0, const Vec3& t1, const Vec3& t2) {
  const Vec3 v0 = t1 - t0, v1 = t2 - t0, v2 = p - t0;
  const double scale = std::max({v0.squaredNorm(), v1.squaredNorm(), (t2 - t1).squaredNorm()});
  if (!(v0.cross(v1).squaredNorm() > 1e-24 * scale * scale))
    throw GeometryError("zero-area triangle in contact pair");
  const double d00 = v0.dot(v0), d01 = v0.dot(v1), d11 = v1.dot(v1);
  const double d20 = v2.dot(v0), d21 = v2.dot(v1);
  const double den = d00 * d11 - d01 * d01;
  const double beta = (d11 * d20 - d01 * d21) / den;
  const double gamma = (d00 * d21 - d01 * d20) / den;
  const double alpha = 1.0 - beta - gamma;
  if (alpha > 0.0 && beta > 0.0 && gamma > 0.0) {
    Classification out;
    out.type = ContactType::PT;
    out.slots = {1, 2, 3, 0};
    out.weight = {1.0, alpha, beta, gamma};
    out.side = {1, -1, -1, -1};
    out.point_a = p;
    out.point_b = alpha * t0 + beta * t1 + gamma * t2;
    out.distance = (out.point_a - out.point_b).norm();
    return out;
  }
  const Classification cand[3] = {point_feature(p, t0, t1, 0, 1, 2), point_feature(p, t1, t2, 0, 2, 3),
                                   point_feature(p, t2, t0, 0, 3, 1)};
  int best = 0;
  for (int k = 1; k < 3; ++k)
    if (cand[k].distance < cand[best].distance) best = k;
  Classification out = cand[best];
  out.side = {1, -1, -1, -1};
  return out;
}

Classification classify(const ContactPair& pair, const VecX& q) {
  auto x = [&](int k) -> Vec3 { return q.segment<3>(3 * pair.nodes[k]); };
  if (pair.stencil == Stencil::EdgeEdge) return classify_segments(x(0), x(1), x(2), x(3));
  return classify_point_triangle(x(0), x(1), x(2), x(3));
}

Separation separation(const std::array<Vec3, 4>& x, const Classification& c) {
  using J = Jet<12>;
  V3<J> v[4];
  for (int k = 0; k < 4; ++k)
    v[k] = V3<J>(J::variable(x[k].x(), 3 * k), J::variable(x[k].y(), 3 * k + 1),
                 J::variable(x[k].z(), 3 * k + 2));
  Separation out;
  if (c.type == ContactType::None) return out;
  // Coincident points leave the direction undefined; report zero distance.
  if ((c.type == ContactType::PP || c.type == ContactType::PE) && !(c.distance > 1e-15)) return out;
  const J d = separation_value(c.type, v, c.slots);
  out.value = d.v;
  out.grad = d.g;
  out.hess = d.h;
  return out;
}

ContactScalar contact_energy(double distance, double contact_distance, double delta) {
  ContactScalar s;
  const double x = contact_distance - distance;
  if (distance <= contact_distance - delta) {
    s.energy = x * x;
    s.slope = -2.0 * x;
    s.curvature = 2.0;
  } else if (distance < contact_distance + delta) {
    const double k1 = 15.0 / delta;
    const double z = k1 * x;
    const double l = std::log1p(std::exp(z)) / k1;
    const double sig = 1.0 / (1.0 + std::exp(-z));
    s.energy = l * l;
    s.slope = -2.0 * l * sig;
    s.curvature = 2.0 * sig * sig + 2.0 * l * k1 * sig * (1.0 - sig);
  }
  return s;
}

EnergyContribution pair_contact(const ContactPair& pair, const ContactParams& params, const ForceEval& ev,
                                int ndof, bool with_friction) {
  EnergyContribution out(ndof);
  scatter(pair_local(pair, params, ev, with_friction), out);
  return out;
}

ContactModel::ContactModel(const SoftRobot& robot, ContactParams params, GroundParams ground)
    : robot_(robot), params_(params), ground_(ground) {
  const int n = robot.n_nodes();
  shell_node_.assign(n, false);
  for (const auto& t : robot.mesh.triangles)
    for (int v : t) shell_node_[v] = true;
  node_radius_.resize(n);
  for (int i = 0; i < n; ++i)
    node_radius_[i] = shell_node_[i] ? 0.5 * robot.geometry.shell_thickness : robot.geometry.rod_radius;

  if (params_.exclusion_hops > 0) {
    std::vector<std::vector<int>> adj(n);
    for (const auto& e : robot.edges) {
      adj[e.a].push_back(e.b);
      adj[e.b].push_back(e.a);
    }
    near_.resize(n);
    for (int s = 0; s < n; ++s) {
      std::vector<int> depth(n, -1);
      std::deque<int> queue{s};
      depth[s] = 0;
      while (!queue.empty()) {
        const int u = queue.front();
        queue.pop_front();
        near_[s].push_back(u);
        if (depth[u] == params_.exclusion_hops) continue;
        for (int w : adj[u])
          if (depth[w] < 0) {
            depth[w] = depth[u] + 1;
            queue.push_back(w);
          }
      }
      std::sort(near_[s].begin(), near_[s].end());
    }
  }
}

bool ContactModel::excluded(const std::array<int, 4>& nodes, int split) const {
  for (int i = 0; i < split; ++i)
    for (int j = split; j < 4; ++j) {
      if (nodes[i] == nodes[j]) return true;
      if (!near_.empty() && std::binary_search(near_[nodes[i]].begin(), near_[nodes[i]].end(), nodes[j]))
        return true;
    }
  return false;
}

std::vector<ContactPair> ContactModel::filter(const VecX& q, double margin,
                                              const std::vector<std::pair<int, int>>& edge_pairs,
                                              const std::vector<std::pair<int, int>>& node_tris) const {
  const double r = robot_.geometry.rod_radius, h = robot_.geometry.shell_thickness;
  std::vector<ContactPair> out;
  for (auto [i, j] : edge_pairs) {
    const Edge& a = robot_.edges[i];
    const Edge& b = robot_.edges[j];
    ContactPair p;
    p.stencil = Stencil::EdgeEdge;
    p.nodes = {a.a, a.b, b.a, b.b};
    if (excluded(p.nodes, 2)) continue;
    const int shells = (a.kind == EdgeKind::Shell) + (b.kind == EdgeKind::Shell);
    p.kind = shells == 0 ? PairKind::RodRod : shells == 1 ? PairKind::RodShell : PairKind::ShellShell;
    p.contact_distance = shells == 0 ? 2.0 * r : shells == 1 ? r + 0.5 * h : h;
    const double gap = box_gap(box_of(q, {a.a, a.b}), box_of(q, {b.a, b.b}));
    if (gap <= p.contact_distance + params_.delta + margin) out.push_back(p);
  }
  for (auto [node, t] : node_tris) {
    const auto& tri = robot_.mesh.triangles[t];
    ContactPair p;
    p.stencil = Stencil::PointTriangle;
    p.nodes = {node, tri[0], tri[1], tri[2]};
    if (excluded(p.nodes, 1)) continue;
    p.kind = shell_node_[node] ? PairKind::ShellShell : PairKind::RodShell;
    p.contact_distance = shell_node_[node] ? h : r + 0.5 * h;
    const double gap = box_gap(box_of(q, {node}), box_of(q, {tri[0], tri[1], tri[2]}));
    if (gap <= p.contact_distance + params_.delta + margin) out.push_back(p);
  }
  return out;
}

void ContactModel::build_candidates(const VecX& q, double margin) {
  pairs_.clear();
  if (!params_.enabled) return;
  const double r = robot_.geometry.rod_radius, h = robot_.geometry.shell_thickness;
  const double reach = std::max({2.0 * r, r + 0.5 * h, h}) + params_.delta + margin;
  const int ne = static_cast<int>(robot_.edges.size());
  const int nt = static_cast<int>(robot_.mesh.triangles.size());

  std::vector<Box> edge_box(ne);
  double extent = reach;
  for (int e = 0; e < ne; ++e) {
    edge_box[e] = box_of(q, {robot_.edges[e].a, robot_.edges[e].b});
    extent = std::max(extent, (edge_box[e].hi - edge_box[e].lo).maxCoeff());
  }
  SpatialHash edges(extent);
  for (int e = 0; e < ne; ++e) edges.insert(e, edge_box[e]);
  std::vector<std::pair<int, int>> edge_pairs;
  for (int e = 0; e < ne; ++e)
    for (int o : edges.query(edge_box[e], reach))
      if (o > e) edge_pairs.emplace_back(e, o);

  std::vector<std::pair<int, int>> node_tris;
  if (nt > 0) {
    std::vector<Box> tri_box(nt);
    double tri_extent = reach;
    for (int t = 0; t < nt; ++t) {
      const auto& tri = robot_.mesh.triangles[t];
      tri_box[t] = box_of(q, {tri[0], tri[1], tri[2]});
      tri_extent = std::max(tri_extent, (tri_box[t].hi - tri_box[t].lo).maxCoeff());
    }
    SpatialHash tris(tri_extent);
    for (int t = 0; t < nt; ++t) tris.insert(t, tri_box[t]);
    for (int v = 0; v < robot_.n_nodes(); ++v)
      for (int t : tris.query(box_of(q, {v}), reach)) node_tris.emplace_back(v, t);
  }
  pairs_ = filter(q, margin, edge_pairs, node_tris);
}

std::vector<ContactPair> ContactModel::all_pairs_bruteforce(const VecX& q, double margin) const {
  std::vector<std::pair<int, int>> edge_pairs, node_tris;
  const int ne = static_cast<int>(robot_.edges.size());
  for (int i = 0; i < ne; ++i)
    for (int j = i + 1; j < ne; ++j) edge_pairs.emplace_back(i, j);
  for (int v = 0; v < robot_.n_nodes(); ++v)
    for (int t = 0; t < static_cast<int>(robot_.mesh.triangles.size()); ++t) node_tris.emplace_back(v, t);
  return filter(q, margin, edge_pairs, node_tris);
}

int ContactModel::add(const ForceEval& ev, EnergyContribution& out) const {
  int active = 0;
  if (params_.enabled && !pairs_.empty()) {
    std::vector<Local> locals(pairs_.size());
    parallel_for(static_cast<int>(pairs_.size()), ev.threads,
                 [&](int i) { locals[i] = pair_local(pairs_[i], params_, ev, params_.friction); });
    for (const auto& l : locals) {
      if (!l.active) continue;
      ++active;
      scatter(l, out);
    }
  }
  if (!ground_.enabled) return active;

  using D3 = Dual<3>;
  for (int i = 0; i < robot_.n_nodes(); ++i) {
    const int z = 3 * i + 2;
    const double rad = node_radius_[i];
    const double dist = ev.q[z] - ground_.height;
    const ContactScalar cs = contact_energy(dist, rad, params_.delta);
    if (cs.energy == 0.0 && cs.slope == 0.0) continue;
    ++active;
    out.energy += params_.k_c * cs.energy;
    out.force[z] -= params_.k_c * cs.slope;
    out.jacobian.emplace_back(z, z, -params_.k_c * cs.curvature * ev.dq);
    if (ground_.mu <= 0.0) continue;
    // seeds: 0 -> z position, 1 -> vx, 2 -> vy
    D3 zd(ev.q[z]);
    zd.g[0] = ev.dq;
    D3 vx(ev.v[3 * i]), vy(ev.v[3 * i + 1]);
    vx.g[1] = ev.dv;
    vy.g[2] = ev.dv;
    const D3 mag = (-params_.k_c) * energy_slope(zd - ground_.height, rad, params_.delta);
    const D3 s = sqrt(vx * vx + vy * vy + kSlipEps * kSlipEps);
    const D3 gamma = 2.0 / (1.0 + exp(-params_.k2() * s)) - 1.0;
    const D3 scale = -ground_.mu * gamma * mag / s;
    const D3 f[2] = {scale * vx, scale * vy};
    const int cols[3] = {z, 3 * i, 3 * i + 1};
    for (int a = 0; a < 2; ++a) {
      out.force[3 * i + a] += f[a].v;
      for (int k = 0; k < 3; ++k)
        if (f[a].g[k] != 0.0) out.jacobian.emplace_back(3 * i + a, cols[k], f[a].g[k]);
    }
  }
  return active;
}

}  // namespace rodshell
