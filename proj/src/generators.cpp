#include "rodshell/scenario.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>

namespace rodshell {
namespace {

constexpr double kPi = std::numbers::pi;

int count(const MeshSpec& s, const std::string& key, int min) {
  const double v = s.params.at(key);
  if (v != std::floor(v) || v < min)
    throw ConfigError("mesh.params." + key + ": expected an integer >= " + std::to_string(min));
  return static_cast<int>(v);
}

double length(const MeshSpec& s, const std::string& key) {
  const double v = s.params.at(key);
  if (!(v > 0.0)) throw ConfigError("mesh.params." + key + ": must be positive");
  return v;
}

// Triangulates the band between two closed rings by walking both in angle.
// Ring entries are (node, angle in [0, 2 pi)).
void stitch(std::vector<std::array<int, 3>>& tris, const std::vector<std::pair<int, double>>& inner,
            const std::vector<std::pair<int, double>>& outer) {
  const size_t ni = inner.size(), no = outer.size();
  size_t i = 0, o = 0;
  auto ang = [](const std::vector<std::pair<int, double>>& r, size_t k) {
    return r[k % r.size()].second + 2.0 * kPi * static_cast<double>(k / r.size());
  };
  while (i < ni || o < no) {
    const bool take_outer = i == ni || (o < no && ang(outer, o + 1) <= ang(inner, i + 1));
    if (take_outer) {
      tris.push_back({inner[i % ni].first, outer[o % no].first, outer[(o + 1) % no].first});
      ++o;
    } else {
      tris.push_back({inner[i % ni].first, outer[o % no].first, inner[(i + 1) % ni].first});
      ++i;
    }
  }
}

// Concentric rings, ring k carrying sectors * k nodes; `place` maps
// (ring fraction, azimuth) to a point.
template <class F>
MeshInput ring_mesh(int rings, int sectors, F place) {
  MeshInput m;
  m.nodes.push_back(place(0.0, 0.0));
  std::vector<std::pair<int, double>> prev{{0, 0.0}};
  for (int k = 1; k <= rings; ++k) {
    std::vector<std::pair<int, double>> ring;
    const int n = sectors * k;
    for (int j = 0; j < n; ++j) {
      const double phi = 2.0 * kPi * j / n;
      ring.emplace_back(static_cast<int>(m.nodes.size()), phi);
      m.nodes.push_back(place(static_cast<double>(k) / rings, phi));
    }
    if (k == 1) {
      for (int j = 0; j < n; ++j) m.triangles.push_back({0, ring[j].first, ring[(j + 1) % n].first});
    } else {
      stitch(m.triangles, prev, ring);
    }
    prev = std::move(ring);
  }
  return m;
}

// Flip triangles whose normal points toward the given reference direction's
// opposite so the mesh is consistently oriented.
void orient(MeshInput& m, const std::function<Vec3(const Vec3&)>& outward) {
  for (auto& t : m.triangles) {
    const Vec3 a = m.nodes[t[0]], b = m.nodes[t[1]], c = m.nodes[t[2]];
    const Vec3 n = (b - a).cross(c - a);
    if (n.dot(outward((a + b + c) / 3.0)) < 0.0) std::swap(t[1], t[2]);
  }
}

}  // namespace

MeshInput generate_mesh(const MeshSpec& s) {
  if (!s.file.empty()) return read_mesh_file(s.file);
  MeshInput m;
  if (s.generator == "rod") {
    const int n = count(s, "nodes", 2);
    const double L = length(s, "length");
    Vec3 d(s.params.at("dx"), s.params.at("dy"), s.params.at("dz"));
    if (d.norm() == 0.0) throw ConfigError("mesh.params: direction (dx, dy, dz) must be nonzero");
    d.normalize();
    for (int i = 0; i < n; ++i) m.nodes.push_back(d * (L * i / (n - 1)));
    for (int i = 0; i + 1 < n; ++i) m.rod_edges.push_back({i, i + 1});
  } else if (s.generator == "helix") {
    // top node at the origin region, axis -z
    const int n = count(s, "nodes", 3);
    const double R = length(s, "radius"), pitch = length(s, "pitch"), turns = length(s, "turns");
    for (int i = 0; i < n; ++i) {
      const double phi = 2.0 * kPi * turns * i / (n - 1);
      m.nodes.emplace_back(R * std::cos(phi), R * std::sin(phi), -pitch * phi / (2.0 * kPi));
    }
    for (int i = 0; i + 1 < n; ++i) m.rod_edges.push_back({i, i + 1});
  } else if (s.generator == "rectangle") {
    const int nx = count(s, "nx", 1), ny = count(s, "ny", 1);
    const double lx = length(s, "lx"), ly = length(s, "ly");
    for (int j = 0; j <= ny; ++j)
      for (int i = 0; i <= nx; ++i) m.nodes.emplace_back(lx * i / nx, ly * j / ny, 0.0);
    auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        // alternate the diagonal so the mesh has no preferred shear direction
        if ((i + j) % 2 == 0) {
          m.triangles.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
          m.triangles.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
        } else {
          m.triangles.push_back({id(i, j), id(i + 1, j), id(i, j + 1)});
          m.triangles.push_back({id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)});
        }
      }
  } else if (s.generator == "disk") {
    const int rings = count(s, "rings", 1), sectors = count(s, "sectors", 3);
    const double R = length(s, "radius");
    m = ring_mesh(rings, sectors, [R](double f, double phi) {
      return Vec3(R * f * std::cos(phi), R * f * std::sin(phi), 0.0);
    });
    orient(m, [](const Vec3&) { return Vec3::UnitZ(); });
  } else if (s.generator == "jellyfish") {
    const int rings = count(s, "rings", 1), sectors = count(s, "sectors", 3);
    const double R = length(s, "radius");
    m = ring_mesh(rings, sectors, [R](double f, double phi) {
      const double a = 0.5 * kPi * f;  // polar angle from the apex
      return Vec3(R * std::sin(a) * std::cos(phi), R * std::sin(a) * std::sin(phi), R * std::cos(a));
    });
    orient(m, [](const Vec3& c) { return c; });
    const int tentacles = count(s, "tentacles", 0);
    if (tentacles > 0) {
      const int tn = count(s, "tentacle_nodes", 1);
      const double tl = length(s, "tentacle_length");
      const int rim = sectors * rings;
      const int rim_first = static_cast<int>(m.nodes.size()) - rim;
      for (int k = 0; k < tentacles; ++k) {
        int prev = rim_first + (k * rim) / tentacles;
        const Vec3 base = m.nodes[prev];
        for (int i = 1; i <= tn; ++i) {
          const int id = static_cast<int>(m.nodes.size());
          m.nodes.push_back(base - Vec3::UnitZ() * (tl * i / tn));
          m.rod_edges.push_back({prev, id});
          prev = id;
        }
      }
    }
  } else {
    throw ConfigError("mesh.generator: unknown generator '" + s.generator + "'");
  }
  return m;
}

VecX initial_positions(const SoftRobot& robot, const InitialShape& shape, unsigned long long seed) {
  VecX q = robot.q0;
  if (shape.type == "roll") {
    const double R = shape.radius, arc = R * shape.angle;
    for (int i = 0; i < robot.n_nodes(); ++i) {
      const Vec3 x = robot.mesh.nodes[i];
      const double u = x[0] - shape.start;
      if (u <= 0.0) continue;
      const double a = std::min(u, arc) / R;  // turned angle
      Vec3 y = x;
      y[0] = shape.start + R * std::sin(a);
      y[2] = x[2] + R * (1.0 - std::cos(a));
      if (u > arc) {
        y[0] += (u - arc) * std::cos(shape.angle);
        y[2] += (u - arc) * std::sin(shape.angle);
      }
      q.segment<3>(3 * i) = y;
    }
  }
  if (shape.perturbation > 0.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-shape.perturbation, shape.perturbation);
    for (int i = 0; i < 3 * robot.n_nodes(); ++i) q[i] += u(rng);
  }
  return q;
}

std::vector<Vec3> s_curve_shape(const std::vector<Vec3>& nodes, double amplitude) {
  // turning angle phi(s) = amplitude cos(2 pi s / L): zero curvature at both
  // ends and both ends on the x axis
  const int n = static_cast<int>(nodes.size());
  std::vector<double> len(n - 1);
  double L = 0.0;
  for (int i = 0; i + 1 < n; ++i) L += (len[i] = (nodes[i + 1] - nodes[i]).norm());
  std::vector<Vec3> out(n);
  out[0] = nodes[0];
  double s = 0.0;
  for (int i = 0; i + 1 < n; ++i) {
    const double phi = amplitude * std::cos(2.0 * kPi * (s + 0.5 * len[i]) / L);
    out[i + 1] = out[i] + len[i] * Vec3(std::cos(phi), std::sin(phi), 0.0);
    s += len[i];
  }
  return out;
}

void write_reference_file(const std::string& path, const ReferenceTrajectory& ref) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write reference file '" + path + "'");
  out << std::setprecision(17);
  if (ref.strains.empty()) return;
  const size_t ns = ref.strains[0].stretch.size(), nb = ref.strains[0].bend.size();
  out << "t";
  for (size_t i = 0; i < ns; ++i) out << ",stretch_" << i;
  for (size_t i = 0; i < nb; ++i) out << ",kappa1_" << i;
  for (size_t i = 0; i < nb; ++i) out << ",kappa2_" << i;
  out << "\n";
  for (size_t k = 0; k < ref.times.size(); ++k) {
    out << ref.times[k];
    for (double v : ref.strains[k].stretch) out << "," << v;
    for (const Vec2& b : ref.strains[k].bend) out << "," << b[0];
    for (const Vec2& b : ref.strains[k].bend) out << "," << b[1];
    out << "\n";
  }
}

ReferenceTrajectory read_reference_file(const std::string& path, const SoftRobot& robot) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open reference file '" + path + "'");
  const size_t ns = robot.stretch_springs.size(), nb = robot.bend_twist_springs.size();
  const size_t cols = 1 + ns + 2 * nb;
  std::string line;
  int lineno = 0;
  ReferenceTrajectory ref;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (lineno == 1 && line[0] == 't') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ConfigError(path + ":" + std::to_string(lineno) + ": bad number '" + cell + "'");
      }
    }
    if (row.size() != cols)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(cols) + " columns, got " +
                        std::to_string(row.size()));
    StrainTargets s;
    s.stretch.assign(row.begin() + 1, row.begin() + 1 + ns);
    for (size_t i = 0; i < nb; ++i) s.bend.emplace_back(row[1 + ns + i], row[1 + ns + nb + i]);
    ref.times.push_back(row[0]);
    ref.strains.push_back(std::move(s));
  }
  ref.validate();
  return ref;
}

}  // namespace rodshell
