#include "rodshell/scenario.hpp"

#include <map>

namespace rodshell {
namespace {

std::string cantilever(const std::string& E, const std::string& total) {
  return R"({
  "name": "cantilever_)" + E + R"(",
  "description": "clamped rod sagging under gravity, implicit Euler",
  "mesh": {"generator": "rod", "params": {"nodes": 101, "length": 0.1}},
  "geometry": {"rod_radius": 0.02},
  "material": {"rod": {"density": 1000, "youngs_modulus": )" + E + R"(, "poisson_ratio": 0.5}},
  "environment": {"gravity": true, "g": [0, 0, -9.81]},
  "sim": {"dt": 0.01, "total_time": )" + total + R"(, "integrator": "implicit_euler"},
  "constraints": {"fixed_nodes": [0, 1], "fixed_edges": [0]},
  "output": {"log_interval": 10, "directory": "out/cantilever_)" + E + R"("}
})";
}

std::string helix(const std::string& E, const std::string& r, const std::string& dt) {
  return R"({
  "name": "helix_)" + E + R"(",
  "description": "helical rod clamped at the top, settling under gravity with damping",
  "mesh": {"generator": "helix", "params": {"nodes": 100, "radius": 0.02, "pitch": 0.02, "turns": 5}},
  "geometry": {"rod_radius": )" + r + R"(},
  "material": {"rod": {"density": 1273.52, "youngs_modulus": )" + E + R"(, "poisson_ratio": 0.5}},
  "environment": {"gravity": true, "damping": 2.0},
  "sim": {"dt": )" + dt + R"(, "total_time": 10, "integrator": "implicit_euler"},
  "constraints": {"fixed_nodes": [0, 1], "fixed_edges": [0]},
  "output": {"log_interval": 10, "directory": "out/helix_)" + E + R"(", "tip_node": 99}
})";
}

const char* kSnake = R"({
  "name": "snake",
  "description": "planar rod swimming by a traveling curvature wave against anisotropic drag",
  "mesh": {"generator": "rod", "params": {"nodes": 101, "length": 0.1}},
  "geometry": {"rod_radius": 0.00175},
  "material": {"rod": {"density": 1000, "youngs_modulus": 1e6, "poisson_ratio": 0.5}},
  "environment": {"gravity": false, "rft": {"c_t": 0.5, "c_n": 5.0}},
  "sim": {"dt": 0.01, "total_time": 10, "integrator": "implicit_euler", "two_d": true},
  "actuation": {"type": "traveling_wave", "amplitude": 40, "wavelength": 0.1, "frequency": 1.0,
                "ramp_time": 2.0, "component": 1},
  "output": {"log_interval": 1, "directory": "out/snake", "head_node": 0, "tip_node": 0}
})";

const char* kRectFold = R"({
  "name": "shell_fold_rect_%E%",
  "description": "rectangular shell folded over onto itself on the ground, settling under gravity",
  "mesh": {"generator": "rectangle", "params": {"nx": 80, "ny": 4, "lx": 1.0, "ly": 0.1}},
  "geometry": {"shell_thickness": 0.001},
  "material": {"shell": {"density": 1000, "youngs_modulus": %E%, "poisson_ratio": 0.3}},
  "initial": {"type": "roll", "start": 0.45, "radius": 0.06, "angle": 3.14159},
  "environment": {"gravity": true, "damping": 2.0},
  "sim": {"dt": 0.002, "total_time": 3, "integrator": "implicit_euler", "max_dt_halvings": 3},
  "contact": {"delta": 0.0002, "k_c": 1000, "mu": 0.2, "friction": true, "nu_slip": 0.001},
  "ground": {"height": -0.0005, "mu": 0.2},
  "output": {"log_interval": 25, "directory": "out/shell_fold_rect_%E%"}
})";

const char* kDiskFold = R"({
  "name": "shell_fold_disk_%E%",
  "description": "circular shell held at its center, draping and folding under gravity",
  "seed": 7,
  "mesh": {"generator": "disk", "params": {"rings": 10, "sectors": 6, "radius": 0.3}},
  "geometry": {"shell_thickness": 0.001},
  "material": {"shell": {"density": 1000, "youngs_modulus": %E%, "poisson_ratio": 0.3}},
  "initial": {"perturbation": 0.0005},
  "environment": {"gravity": true, "damping": 2.0},
  "sim": {"dt": 0.002, "total_time": 3, "integrator": "implicit_euler", "max_dt_halvings": 3},
  "constraints": {"fixed_within": {"center": [0, 0, 0], "radius": 0.061}},
  "contact": {"delta": 0.0005, "k_c": 1000, "mu": 0.0, "exclusion_hops": 1},
  "output": {"log_interval": 25, "directory": "out/shell_fold_disk_%E%"}
})";

const char* kSShape = R"({
  "name": "s_shape",
  "description": "simply supported rod driven to a horizontal S shape by PI control of natural strains",
  "mesh": {"generator": "rod", "params": {"nodes": 51, "length": 0.5}},
  "geometry": {"rod_radius": 0.005},
  "material": {"rod": {"density": 1000, "youngs_modulus": 1e8, "poisson_ratio": 0.5}},
  "environment": {"gravity": true, "g": [0, -9.81, 0], "damping": 20},
  "sim": {"dt": 0.005, "total_time": 4, "integrator": "implicit_euler", "two_d": true},
  "constraints": {"fixed_nodes": [0], "fixed_axes": [{"node": 50, "axes": "yz"}]},
  "controller": {
    "stretch": {"k_p": 0.1, "k_i": 0.0, "rate_limit": 0.001, "integral_clamp": 1},
    "bend": {"k_p": 0.1, "k_i": 0.01, "rate_limit": 0.05, "integral_clamp": 1},
    "control_stretch": true, "control_bend": true, "smoothing_window": 1,
    "reference": {"type": "shape", "shape": "s_curve", "amplitude": 0.6}
  },
  "output": {"log_interval": 10, "directory": "out/s_shape", "tip_node": 25}
})";

const char* kSerpentine = R"({
  "name": "serpentine",
  "description": "PI tracking of a recorded serpentine gait in a resistive fluid",
  "mesh": {"generator": "rod", "params": {"nodes": 101, "length": 0.1}},
  "geometry": {"rod_radius": 0.00175},
  "material": {"rod": {"density": 1000, "youngs_modulus": 1e8, "poisson_ratio": 0.5}},
  "environment": {"gravity": false, "rft": {"c_t": 0.5, "c_n": 5.0}},
  "sim": {"dt": 0.01, "total_time": 3, "integrator": "implicit_euler", "two_d": true, "max_dt_halvings": 3},
  "controller": {
    "bend": {"k_p": 1.0, "k_i": 0.0, "rate_limit": 0.004},
    "control_bend": true, "smoothing_window": 1,
    "reference": {"type": "simulate", "offset": 3.0,
                  "actuation": {"type": "traveling_wave", "amplitude": 40, "wavelength": 0.1,
                                "frequency": 0.5, "ramp_time": 2.0, "component": 1}}
  },
  "output": {"log_interval": 1, "directory": "out/serpentine", "head_node": 0, "tip_node": 0}
})";

const char* kJellyfish = R"({
  "name": "jellyfish",
  "description": "dome shell with tentacles pulsing its hinges; volume-rate thrust model",
  "experimental": true,
  "mesh": {"generator": "jellyfish", "params": {"rings": 5, "sectors": 6, "radius": 0.05,
           "tentacles": 6, "tentacle_nodes": 8, "tentacle_length": 0.05}},
  "geometry": {"rod_radius": 0.001, "shell_thickness": 0.001},
  "material": {"shell": {"density": 1100, "youngs_modulus": 1e6, "poisson_ratio": 0.5},
               "rod": {"density": 1100, "youngs_modulus": 1e7, "poisson_ratio": 0.5}},
  "environment": {"gravity": true, "buoyancy": {"fluid_density": 1100}, "damping": 1.0, "thrust": 5.0},
  "sim": {"dt": 0.005, "total_time": 3, "integrator": "implicit_euler"},
  "actuation": {"type": "hinge_pulse", "amplitude": 0.3, "frequency": 1.0, "ramp_time": 0.5},
  "output": {"log_interval": 10, "directory": "out/jellyfish", "tip_node": 0}
})";

std::string substitute(std::string s, const std::string& key, const std::string& value) {
  for (size_t p; (p = s.find(key)) != std::string::npos;) s.replace(p, key.size(), value);
  return s;
}

const std::map<std::string, std::string>& table() {
  static const std::map<std::string, std::string> t = {
      {"cantilever_1e5", cantilever("1e5", "3")},
      {"cantilever_1e6", cantilever("1e6", "2")},
      {"cantilever_1e7", cantilever("1e7", "1")},
      {"helix_1e7", helix("1e7", "0.005", "0.01")},
      {"helix_1e9", helix("1e9", "0.001", "0.01")},
      {"snake", kSnake},
      {"shell_fold_rect_1e8", substitute(kRectFold, "%E%", "1e8")},
      {"shell_fold_rect_1e9", substitute(kRectFold, "%E%", "1e9")},
      {"shell_fold_disk_2e6", substitute(kDiskFold, "%E%", "2e6")},
      {"shell_fold_disk_2e7", substitute(kDiskFold, "%E%", "2e7")},
      {"s_shape", kSShape},
      {"serpentine", kSerpentine},
      {"jellyfish", kJellyfish},
  };
  return t;
}

}  // namespace

std::vector<std::string> scenario_names() {
  std::vector<std::string> names;
  for (const auto& [n, _] : table()) names.push_back(n);
  return names;
}

ScenarioConfig bundled_scenario(const std::string& name) {
  auto it = table().find(name);
  if (it == table().end()) throw ConfigError("unknown scenario '" + name + "'");
  return parse_config(it->second, "scenario " + name);
}

}  // namespace rodshell
