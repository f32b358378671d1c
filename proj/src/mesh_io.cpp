#include "rodshell/mesh.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

namespace rodshell {
namespace {

std::string strip(const std::string& line) {
  std::string s = line.substr(0, line.find('#'));
  for (char& c : s)
    if (c == ',' || c == '\t' || c == '\r') c = ' ';
  const auto lo = s.find_first_not_of(' ');
  if (lo == std::string::npos) return {};
  const auto hi = s.find_last_not_of(' ');
  return s.substr(lo, hi - lo + 1);
}

template <class T, size_t K>
std::array<T, K> read_row(const std::string& text, const std::string& where) {
  std::istringstream is(text);
  std::array<T, K> row{};
  for (size_t k = 0; k < K; ++k)
    if (!(is >> row[k])) throw ConfigError(where + ": expected " + std::to_string(K) + " values");
  std::string extra;
  if (is >> extra) throw ConfigError(where + ": unexpected token '" + extra + "'");
  return row;
}

}  // namespace

MeshInput parse_mesh(std::istream& in, const std::string& source) {
  enum class Section { None, Nodes, Edges, Triangles } section = Section::None;
  MeshInput mesh;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = source + ":" + std::to_string(lineno);
    const std::string s = strip(line);
    if (s.empty()) continue;
    if (s[0] == '*') {
      if (s == "*nodes") section = Section::Nodes;
      else if (s == "*edges") section = Section::Edges;
      else if (s == "*triangles") section = Section::Triangles;
      else throw ConfigError(where + ": unknown section '" + s + "'");
      continue;
    }
    switch (section) {
      case Section::None:
        throw ConfigError(where + ": data before any section header");
      case Section::Nodes: {
        const auto r = read_row<double, 3>(s, where);
        mesh.nodes.emplace_back(r[0], r[1], r[2]);
        break;
      }
      case Section::Edges:
        mesh.rod_edges.push_back(read_row<int, 2>(s, where));
        break;
      case Section::Triangles:
        mesh.triangles.push_back(read_row<int, 3>(s, where));
        break;
    }
  }
  return mesh;
}

MeshInput read_mesh_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open mesh file '" + path + "'");
  return parse_mesh(in, path);
}

void write_mesh(std::ostream& out, const MeshInput& mesh) {
  out << std::setprecision(17);
  out << "*nodes\n";
  for (const auto& x : mesh.nodes) out << x[0] << " " << x[1] << " " << x[2] << "\n";
  if (!mesh.rod_edges.empty()) {
    out << "*edges\n";
    for (const auto& e : mesh.rod_edges) out << e[0] << " " << e[1] << "\n";
  }
  if (!mesh.triangles.empty()) {
    out << "*triangles\n";
    for (const auto& t : mesh.triangles) out << t[0] << " " << t[1] << " " << t[2] << "\n";
  }
}

void write_mesh_file(const std::string& path, const MeshInput& mesh) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write mesh file '" + path + "'");
  write_mesh(out, mesh);
}

}  // namespace rodshell
