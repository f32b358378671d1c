#pragma once

#include "rodshell/control.hpp"
#include "rodshell/stepper.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace rodshell {

// Either a mesh file in the plain-text format or a named generator with
// numeric parameters (rod, helix, rectangle, disk, jellyfish).
struct MeshSpec {
  std::string file;
  std::string generator;
  std::map<std::string, double> params;
};

// Isometric roll of a flat mesh: points with x > start wrap onto a cylinder of
// the given radius for `angle` radians, then continue straight. Rest shape
// stays the undeformed mesh.
struct InitialShape {
  std::string type;  // "", "roll"
  double start = 0.0, radius = 0.0, angle = 0.0;
  double perturbation = 0.0;  // uniform random nodal noise, m (uses the seed)
};

struct AxisFix {
  int node = -1;
  std::string axes = "xyz";
};

struct NodeMove {
  int node = -1;
  Vec3 displacement = Vec3::Zero();
  Schedule schedule;
};

struct EdgeTwist {
  int edge = -1;
  double angle = 0.0;
  Schedule schedule;
};

struct ConstraintSpec {
  std::vector<int> fixed_nodes;
  std::vector<int> fixed_edges;
  std::vector<AxisFix> fixed_axes;
  // fix every node within radius of center (after the initial shape)
  std::optional<std::pair<Vec3, double>> fixed_within;
  std::vector<NodeMove> moves;
  std::vector<EdgeTwist> twists;
};

// Open-loop natural-strain actuation.
//   traveling_wave: kappa_c(s, t) = A r(t) sin(2 pi (s / wavelength - f t)), A in 1/m
//   hinge_pulse:    hinge rest angle += A r(t) sin(2 pi f t)
struct ActuationSpec {
  std::string type;  // "", "traveling_wave", "hinge_pulse"
  double amplitude = 0.0;
  double wavelength = 1.0;
  double frequency = 0.0;
  double ramp_time = 0.0;
  int component = 1;  // kappa1 or kappa2
};

// Reference for the controller: a target shape, a strain-trajectory file, or
// a trajectory recorded from an open-loop run of `actuation` on the same
// robot, starting `offset` seconds into that run.
struct ReferenceSpec {
  std::string type;  // "shape", "shape_file", "trajectory_file", "simulate"
  std::string file;
  std::string shape;  // "s_curve"
  double amplitude = 0.0;
  ActuationSpec actuation;
  double offset = 0.0;
  double sample_interval = 0.0;  // 0 records every step
};

struct ControllerSpec {
  bool enabled = false;
  PIControllerConfig pi;
  ReferenceSpec reference;
};

struct OutputSpec {
  int log_interval = 10;
  std::string directory = "out";
  bool trajectory = true;
  int tip_node = -1;   // -1 picks the last node
  int head_node = -1;  // -1 disables head_trajectory.csv
};

struct ScenarioConfig {
  std::string name = "unnamed";
  std::string description;
  bool experimental = false;
  unsigned long long seed = 0;
  MeshSpec mesh;
  Geometry geometry;
  Material material;
  ShellModel shell_model = ShellModel::Hinge;
  InitialShape initial;
  EnvironmentSpec environment;
  SimParams sim;
  ConstraintSpec constraints;
  ContactParams contact;
  GroundParams ground;
  ActuationSpec actuation;
  ControllerSpec controller;
  OutputSpec output;
};

// Parses and validates. Unknown keys, wrong types and missing required fields
// raise ConfigError naming the JSON path; syntax errors name line and column.
// Relative file paths resolve against base_dir.
ScenarioConfig parse_config(const std::string& text, const std::string& source = "<config>",
                            const std::string& base_dir = "");
ScenarioConfig load_config(const std::string& path);

// Fully resolved config with every default written out.
std::string dump_config(const ScenarioConfig& cfg);

// Bundled demo scenarios.
std::vector<std::string> scenario_names();
ScenarioConfig bundled_scenario(const std::string& name);

// Mesh generators and the initial-shape map.
MeshInput generate_mesh(const MeshSpec& spec);
VecX initial_positions(const SoftRobot& robot, const InitialShape& shape, unsigned long long seed);

// Target shapes for regulation, same node count as `nodes` and the same edge
// lengths; the first node stays put.
std::vector<Vec3> s_curve_shape(const std::vector<Vec3>& nodes, double amplitude);

// Reference trajectory files: header "t,stretch_0..,kappa1_0..,kappa2_0.."
// followed by one row per sample.
void write_reference_file(const std::string& path, const ReferenceTrajectory& ref);
ReferenceTrajectory read_reference_file(const std::string& path, const SoftRobot& robot);

}  // namespace rodshell
