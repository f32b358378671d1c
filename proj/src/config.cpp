#include "rodshell/scenario.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace rodshell {
namespace {

using json = nlohmann::ordered_json;
constexpr double kInf = std::numeric_limits<double>::infinity();

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw ConfigError((path.empty() ? std::string("<root>") : path) + ": " + msg);
}

// Object reader that remembers which keys were consumed so leftovers can be
// reported as unknown.
class Obj {
 public:
  Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_, "expected an object");
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) const { return j_.contains(key); }

  const json* raw(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void num(const std::string& key, double& out, bool required = false) {
    const json* v = raw(key);
    if (!v) {
      if (required) fail(at(key), "required field is missing");
      return;
    }
    if (!v->is_number()) fail(at(key), "expected a number");
    out = v->get<double>();
    if (!std::isfinite(out)) fail(at(key), "expected a finite number");
  }

  // null stands for "unlimited"
  void limit(const std::string& key, double& out) {
    const json* v = raw(key);
    if (!v) return;
    if (v->is_null()) {
      out = kInf;
      return;
    }
    if (!v->is_number()) fail(at(key), "expected a number or null");
    out = v->get<double>();
  }

  template <class I>
  void integer(const std::string& key, I& out, bool required = false) {
    const json* v = raw(key);
    if (!v) {
      if (required) fail(at(key), "required field is missing");
      return;
    }
    if (!v->is_number_integer()) fail(at(key), "expected an integer");
    if constexpr (std::is_unsigned_v<I>) {
      if (v->is_number_unsigned()) {
        out = v->get<I>();
        return;
      }
      if (v->get<long long>() < 0) fail(at(key), "expected a non-negative integer");
    }
    out = static_cast<I>(v->get<long long>());
  }

  void boolean(const std::string& key, bool& out) {
    const json* v = raw(key);
    if (!v) return;
    if (!v->is_boolean()) fail(at(key), "expected true or false");
    out = v->get<bool>();
  }

  void str(const std::string& key, std::string& out, bool required = false) {
    const json* v = raw(key);
    if (!v) {
      if (required) fail(at(key), "required field is missing");
      return;
    }
    if (!v->is_string()) fail(at(key), "expected a string");
    out = v->get<std::string>();
  }

  void vec3(const std::string& key, Vec3& out, bool required = false) {
    const json* v = raw(key);
    if (!v) {
      if (required) fail(at(key), "required field is missing");
      return;
    }
    if (!v->is_array() || v->size() != 3) fail(at(key), "expected an array of 3 numbers");
    for (int k = 0; k < 3; ++k) {
      if (!(*v)[k].is_number()) fail(at(key) + "[" + std::to_string(k) + "]", "expected a number");
      out[k] = (*v)[k].get<double>();
    }
  }

  void ints(const std::string& key, std::vector<int>& out) {
    const json* v = raw(key);
    if (!v) return;
    if (!v->is_array()) fail(at(key), "expected an array of integers");
    out.clear();
    for (size_t k = 0; k < v->size(); ++k) {
      if (!(*v)[k].is_number_integer()) fail(at(key) + "[" + std::to_string(k) + "]", "expected an integer");
      out.push_back((*v)[k].get<int>());
    }
  }

  std::optional<Obj> sub(const std::string& key) {
    const json* v = raw(key);
    if (!v) return std::nullopt;
    return Obj(*v, at(key));
  }

  // Array of objects.
  std::vector<Obj> list(const std::string& key) {
    const json* v = raw(key);
    std::vector<Obj> out;
    if (!v) return out;
    if (!v->is_array()) fail(at(key), "expected an array");
    for (size_t k = 0; k < v->size(); ++k) out.emplace_back((*v)[k], at(key) + "[" + std::to_string(k) + "]");
    return out;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) fail(at(it.key()), "unknown key");
  }

  const std::string& path() const { return path_; }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void positive(const Obj& o, const std::string& key, double v) {
  if (!(v > 0.0)) fail(o.at(key), "must be positive");
}
void non_negative(const Obj& o, const std::string& key, double v) {
  if (v < 0.0) fail(o.at(key), "must be non-negative");
}

Schedule read_schedule(Obj o) {
  Schedule s;
  std::string shape = "constant";
  o.str("shape", shape);
  if (shape == "constant") s.shape = Schedule::Shape::Constant;
  else if (shape == "ramp") s.shape = Schedule::Shape::Ramp;
  else if (shape == "sine") s.shape = Schedule::Shape::Sine;
  else fail(o.at("shape"), "expected constant, ramp or sine");
  o.num("duration", s.duration);
  o.num("frequency", s.frequency);
  o.num("phase", s.phase);
  if (s.shape == Schedule::Shape::Ramp) non_negative(o, "duration", s.duration);
  o.finish();
  return s;
}

json schedule_json(const Schedule& s) {
  const char* shape = s.shape == Schedule::Shape::Ramp ? "ramp" : s.shape == Schedule::Shape::Sine ? "sine" : "constant";
  return json{{"shape", shape}, {"duration", s.duration}, {"frequency", s.frequency}, {"phase", s.phase}};
}

json vec_json(const Vec3& v) { return json::array({v[0], v[1], v[2]}); }
json limit_json(double v) { return std::isinf(v) ? json(nullptr) : json(v); }

const std::map<std::string, std::map<std::string, std::optional<double>>>& generator_params() {
  // nullopt marks a required parameter
  static const std::map<std::string, std::map<std::string, std::optional<double>>> table = {
      {"rod", {{"nodes", std::nullopt}, {"length", std::nullopt}, {"dx", 1.0}, {"dy", 0.0}, {"dz", 0.0}}},
      {"helix", {{"nodes", std::nullopt}, {"radius", std::nullopt}, {"pitch", std::nullopt}, {"turns", std::nullopt}}},
      {"rectangle", {{"nx", std::nullopt}, {"ny", std::nullopt}, {"lx", std::nullopt}, {"ly", std::nullopt}}},
      {"disk", {{"rings", std::nullopt}, {"sectors", 6.0}, {"radius", std::nullopt}}},
      {"jellyfish",
       {{"rings", std::nullopt},
        {"sectors", 6.0},
        {"radius", std::nullopt},
        {"tentacles", 0.0},
        {"tentacle_nodes", 0.0},
        {"tentacle_length", 0.0}}},
  };
  return table;
}

MeshSpec read_mesh(Obj o, const std::string& base_dir) {
  MeshSpec m;
  o.str("file", m.file);
  o.str("generator", m.generator);
  if (m.file.empty() == m.generator.empty()) fail(o.path(), "give exactly one of 'file' or 'generator'");
  if (!m.file.empty()) {
    std::filesystem::path p(m.file);
    if (p.is_relative() && !base_dir.empty()) p = std::filesystem::path(base_dir) / p;
    m.file = p.lexically_normal().string();
  } else {
    const auto& table = generator_params();
    auto it = table.find(m.generator);
    if (it == table.end()) fail(o.at("generator"), "unknown generator '" + m.generator + "'");
    auto params = o.sub("params");
    for (const auto& [key, def] : it->second) {
      double v = def.value_or(0.0);
      if (params) params->num(key, v, !def.has_value());
      else if (!def) fail(o.at("params") + "." + key, "required field is missing");
      static const std::map<std::string, double> counts = {{"nodes", 2},  {"nx", 1},        {"ny", 1},
                                                           {"rings", 1},  {"sectors", 3},   {"tentacles", 0},
                                                           {"tentacle_nodes", 0}};
      if (auto c = counts.find(key); c != counts.end() && (v != std::floor(v) || v < c->second))
        fail(o.at("params") + "." + key, "expected an integer >= " + std::to_string(static_cast<int>(c->second)));
      m.params[key] = v;
    }
    if (params) params->finish();
  }
  o.finish();
  return m;
}

MaterialProps read_material(Obj o) {
  MaterialProps m;
  o.num("density", m.density, true);
  o.num("youngs_modulus", m.youngs_modulus, true);
  o.num("poisson_ratio", m.poisson_ratio);
  non_negative(o, "density", m.density);
  non_negative(o, "youngs_modulus", m.youngs_modulus);
  if (m.poisson_ratio <= -1.0 || m.poisson_ratio > 0.5) fail(o.at("poisson_ratio"), "must lie in (-1, 0.5]");
  o.finish();
  return m;
}

PIGains read_gains(Obj o) {
  PIGains g;
  o.num("k_p", g.k_p);
  o.num("k_i", g.k_i);
  o.limit("rate_limit", g.rate_limit);
  o.limit("integral_clamp", g.integral_clamp);
  o.finish();
  return g;
}

ActuationSpec read_actuation(Obj o) {
  ActuationSpec a;
  o.str("type", a.type, true);
  if (a.type != "traveling_wave" && a.type != "hinge_pulse")
    fail(o.at("type"), "expected traveling_wave or hinge_pulse");
  o.num("amplitude", a.amplitude);
  o.num("wavelength", a.wavelength);
  o.num("frequency", a.frequency);
  o.num("ramp_time", a.ramp_time);
  o.integer("component", a.component);
  if (a.type == "traveling_wave") positive(o, "wavelength", a.wavelength);
  non_negative(o, "ramp_time", a.ramp_time);
  if (a.component != 1 && a.component != 2) fail(o.at("component"), "expected 1 or 2");
  o.finish();
  return a;
}

json actuation_json(const ActuationSpec& a) {
  return json{{"type", a.type},           {"amplitude", a.amplitude}, {"wavelength", a.wavelength},
              {"frequency", a.frequency}, {"ramp_time", a.ramp_time}, {"component", a.component}};
}

std::string resolve_path(const std::string& file, const std::string& base_dir) {
  std::filesystem::path p(file);
  if (p.is_relative() && !base_dir.empty()) p = std::filesystem::path(base_dir) / p;
  return p.lexically_normal().string();
}

ScenarioConfig read_root(const json& root, const std::string& base_dir) {
  Obj o(root, "");
  ScenarioConfig c;
  o.str("name", c.name);
  o.str("description", c.description);
  o.boolean("experimental", c.experimental);
  o.integer("seed", c.seed);

  auto mesh = o.sub("mesh");
  if (!mesh) fail("mesh", "required field is missing");
  c.mesh = read_mesh(*mesh, base_dir);

  auto geom = o.sub("geometry");
  if (!geom) fail("geometry", "required field is missing");
  geom->num("rod_radius", c.geometry.rod_radius);
  geom->num("shell_thickness", c.geometry.shell_thickness);
  non_negative(*geom, "rod_radius", c.geometry.rod_radius);
  non_negative(*geom, "shell_thickness", c.geometry.shell_thickness);
  geom->finish();

  auto mat = o.sub("material");
  if (!mat) fail("material", "required field is missing");
  if (auto rod = mat->sub("rod")) c.material.rod = read_material(*rod);
  if (auto shell = mat->sub("shell")) c.material.shell = read_material(*shell);
  if (!mat->has("rod") && !mat->has("shell")) fail("material", "give 'rod' and/or 'shell'");
  mat->finish();

  std::string model = "hinge";
  o.str("shell_model", model);
  if (model == "hinge") c.shell_model = ShellModel::Hinge;
  else if (model == "midedge") c.shell_model = ShellModel::MidEdge;
  else fail("shell_model", "expected hinge or midedge");

  if (auto in = o.sub("initial")) {
    in->str("type", c.initial.type);
    if (!c.initial.type.empty() && c.initial.type != "roll") fail(in->at("type"), "expected roll");
    in->num("start", c.initial.start);
    in->num("radius", c.initial.radius);
    in->num("angle", c.initial.angle);
    in->num("perturbation", c.initial.perturbation);
    if (c.initial.type == "roll") positive(*in, "radius", c.initial.radius);
    non_negative(*in, "perturbation", c.initial.perturbation);
    in->finish();
  }

  if (auto env = o.sub("environment")) {
    auto& e = c.environment;
    env->boolean("gravity", e.gravity);
    env->vec3("g", e.g);
    env->num("damping", e.damping);
    non_negative(*env, "damping", e.damping);
    if (auto b = env->sub("buoyancy")) {
      e.buoyancy = true;
      b->num("fluid_density", e.fluid_density, true);
      non_negative(*b, "fluid_density", e.fluid_density);
      b->boolean("enabled", e.buoyancy);
      b->finish();
    }
    if (auto r = env->sub("rft")) {
      e.rft = true;
      r->num("c_t", e.rft_params.c_t, true);
      r->num("c_n", e.rft_params.c_n, true);
      non_negative(*r, "c_t", e.rft_params.c_t);
      non_negative(*r, "c_n", e.rft_params.c_n);
      r->boolean("tangent_terms", e.rft_params.tangent_terms);
      r->boolean("enabled", e.rft);
      r->finish();
    }
    for (auto& l : env->list("point_loads")) {
      PointLoad p;
      l.integer("node", p.node, true);
      l.vec3("force", p.vector, true);
      if (auto s = l.sub("schedule")) p.schedule = read_schedule(*s);
      l.finish();
      e.loads.push_back(p);
    }
    env->num("thrust", e.k_thrust);
    non_negative(*env, "thrust", e.k_thrust);
    env->finish();
  }

  if (auto s = o.sub("sim")) {
    auto& p = c.sim;
    s->num("dt", p.dt, true);
    s->num("total_time", p.total_time, true);
    positive(*s, "dt", p.dt);
    non_negative(*s, "total_time", p.total_time);
    s->num("newton_tol", p.newton_tol);
    s->num("newton_rel_tol", p.newton_rel_tol);
    s->integer("max_newton_iters", p.max_newton_iters);
    if (p.max_newton_iters < 1) fail(s->at("max_newton_iters"), "must be at least 1");
    s->boolean("line_search", p.line_search);
    std::string integ = to_string(p.integrator);
    s->str("integrator", integ);
    try {
      p.integrator = parse_integrator(integ);
    } catch (const ConfigError&) {
      fail(s->at("integrator"), "expected implicit_euler, newmark_beta or implicit_midpoint");
    }
    s->num("newmark_beta", p.newmark_beta);
    s->num("newmark_gamma", p.newmark_gamma);
    s->boolean("static", p.static_flag);
    s->integer("static_ramp_steps", p.static_ramp_steps);
    if (p.static_ramp_steps < 1) fail(s->at("static_ramp_steps"), "must be at least 1");
    s->boolean("two_d", p.two_d);
    std::string solver = to_string(p.solver);
    s->str("solver", solver);
    try {
      p.solver = parse_solver(solver);
    } catch (const ConfigError&) {
      fail(s->at("solver"), "expected dense or sparse");
    }
    s->boolean("pseudo_inverse", p.pseudo_inverse);
    s->integer("max_dt_halvings", p.max_dt_halvings);
    if (p.max_dt_halvings < 0 || p.max_dt_halvings > 4) fail(s->at("max_dt_halvings"), "must lie in [0, 4]");
    s->integer("threads", p.threads);
    if (p.threads < 1) fail(s->at("threads"), "must be at least 1");
    s->finish();
  } else {
    fail("sim", "required field is missing");
  }

  if (auto k = o.sub("constraints")) {
    auto& cs = c.constraints;
    k->ints("fixed_nodes", cs.fixed_nodes);
    k->ints("fixed_edges", cs.fixed_edges);
    for (auto& a : k->list("fixed_axes")) {
      AxisFix f;
      a.integer("node", f.node, true);
      a.str("axes", f.axes);
      if (f.axes.empty() || f.axes.find_first_not_of("xyz") != std::string::npos)
        fail(a.at("axes"), "expected a combination of x, y, z");
      a.finish();
      cs.fixed_axes.push_back(f);
    }
    if (auto w = k->sub("fixed_within")) {
      Vec3 center = Vec3::Zero();
      double radius = 0.0;
      w->vec3("center", center, true);
      w->num("radius", radius, true);
      non_negative(*w, "radius", radius);
      w->finish();
      cs.fixed_within = std::make_pair(center, radius);
    }
    for (auto& m : k->list("moves")) {
      NodeMove mv;
      m.integer("node", mv.node, true);
      m.vec3("displacement", mv.displacement, true);
      if (auto s = m.sub("schedule")) mv.schedule = read_schedule(*s);
      m.finish();
      cs.moves.push_back(mv);
    }
    for (auto& m : k->list("twists")) {
      EdgeTwist tw;
      m.integer("edge", tw.edge, true);
      m.num("angle", tw.angle, true);
      if (auto s = m.sub("schedule")) tw.schedule = read_schedule(*s);
      m.finish();
      cs.twists.push_back(tw);
    }
    k->finish();
  }

  if (auto k = o.sub("contact")) {
    auto& p = c.contact;
    p.enabled = true;
    k->boolean("enabled", p.enabled);
    k->num("delta", p.delta);
    k->num("mu", p.mu);
    k->num("nu_slip", p.nu_slip);
    k->num("k_c", p.k_c, p.enabled);
    k->num("margin", p.margin);
    k->boolean("friction", p.friction);
    k->integer("exclusion_hops", p.exclusion_hops);
    positive(*k, "delta", p.delta);
    positive(*k, "nu_slip", p.nu_slip);
    non_negative(*k, "mu", p.mu);
    non_negative(*k, "k_c", p.k_c);
    if (p.exclusion_hops < 0) fail(k->at("exclusion_hops"), "must be non-negative");
    k->finish();
  }
  if (auto g = o.sub("ground")) {
    c.ground.enabled = true;
    g->boolean("enabled", c.ground.enabled);
    g->num("height", c.ground.height);
    g->num("mu", c.ground.mu);
    non_negative(*g, "mu", c.ground.mu);
    g->finish();
    if (c.ground.enabled && !o.has("contact")) fail("contact", "ground contact needs a contact section (k_c)");
  }

  if (auto a = o.sub("actuation")) c.actuation = read_actuation(*a);

  if (auto k = o.sub("controller")) {
    auto& ctl = c.controller;
    ctl.enabled = true;
    k->boolean("enabled", ctl.enabled);
    if (auto g = k->sub("stretch")) ctl.pi.stretch = read_gains(*g);
    if (auto g = k->sub("bend")) ctl.pi.bend = read_gains(*g);
    k->boolean("control_stretch", ctl.pi.control_stretch);
    k->boolean("control_bend", ctl.pi.control_bend);
    k->integer("smoothing_window", ctl.pi.smoothing_window);
    k->integer("every", ctl.pi.every);
    try {
      ctl.pi.validate();
    } catch (const ConfigError& e) {
      fail(k->path(), e.what());
    }
    auto r = k->sub("reference");
    if (!r) fail(k->at("reference"), "required field is missing");
    auto& ref = ctl.reference;
    r->str("type", ref.type, true);
    if (ref.type == "shape") {
      r->str("shape", ref.shape, true);
      if (ref.shape != "s_curve") fail(r->at("shape"), "expected s_curve");
      r->num("amplitude", ref.amplitude, true);
    } else if (ref.type == "shape_file" || ref.type == "trajectory_file") {
      r->str("file", ref.file, true);
      ref.file = resolve_path(ref.file, base_dir);
    } else if (ref.type == "simulate") {
      auto a = r->sub("actuation");
      if (!a) fail(r->at("actuation"), "required field is missing");
      ref.actuation = read_actuation(*a);
      r->num("offset", ref.offset);
      r->num("sample_interval", ref.sample_interval);
      non_negative(*r, "offset", ref.offset);
      non_negative(*r, "sample_interval", ref.sample_interval);
    } else {
      fail(r->at("type"), "expected shape, shape_file, trajectory_file or simulate");
    }
    r->finish();
    k->finish();
  }

  if (auto out = o.sub("output")) {
    out->integer("log_interval", c.output.log_interval);
    if (c.output.log_interval < 1) fail(out->at("log_interval"), "must be at least 1");
    out->str("directory", c.output.directory);
    out->boolean("trajectory", c.output.trajectory);
    out->integer("tip_node", c.output.tip_node);
    out->integer("head_node", c.output.head_node);
    out->finish();
  }
  o.finish();
  return c;
}

std::pair<int, int> line_col(const std::string& text, size_t byte) {
  int line = 1, col = 1;
  for (size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace

ScenarioConfig parse_config(const std::string& text, const std::string& source, const std::string& base_dir) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    // e.byte is one past the offending character
    const auto [line, col] = line_col(text, e.byte > 0 ? e.byte - 1 : 0);
    throw ConfigError(source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": syntax error");
  }
  try {
    return read_root(root, base_dir);
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path, std::filesystem::path(path).parent_path().string());
}

std::string dump_config(const ScenarioConfig& c) {
  json j;
  j["name"] = c.name;
  j["description"] = c.description;
  j["experimental"] = c.experimental;
  j["seed"] = c.seed;
  if (!c.mesh.file.empty()) {
    j["mesh"] = {{"file", c.mesh.file}};
  } else {
    json p = json::object();
    for (const auto& [k, v] : c.mesh.params) p[k] = v;
    j["mesh"] = {{"generator", c.mesh.generator}, {"params", p}};
  }
  j["geometry"] = {{"rod_radius", c.geometry.rod_radius}, {"shell_thickness", c.geometry.shell_thickness}};
  auto mat = [](const MaterialProps& m) {
    return json{{"density", m.density}, {"youngs_modulus", m.youngs_modulus}, {"poisson_ratio", m.poisson_ratio}};
  };
  j["material"] = {{"rod", mat(c.material.rod)}, {"shell", mat(c.material.shell)}};
  j["shell_model"] = c.shell_model == ShellModel::Hinge ? "hinge" : "midedge";
  j["initial"] = {{"type", c.initial.type},
                  {"start", c.initial.start},
                  {"radius", c.initial.radius},
                  {"angle", c.initial.angle},
                  {"perturbation", c.initial.perturbation}};

  const auto& e = c.environment;
  json env{{"gravity", e.gravity}, {"g", vec_json(e.g)}, {"damping", e.damping}};
  env["buoyancy"] = {{"enabled", e.buoyancy}, {"fluid_density", e.fluid_density}};
  env["rft"] = {{"enabled", e.rft},
                {"c_t", e.rft_params.c_t},
                {"c_n", e.rft_params.c_n},
                {"tangent_terms", e.rft_params.tangent_terms}};
  env["point_loads"] = json::array();
  for (const auto& l : e.loads)
    env["point_loads"].push_back({{"node", l.node}, {"force", vec_json(l.vector)}, {"schedule", schedule_json(l.schedule)}});
  env["thrust"] = e.k_thrust;
  j["environment"] = env;

  const auto& p = c.sim;
  j["sim"] = {{"dt", p.dt},
              {"total_time", p.total_time},
              {"newton_tol", p.newton_tol},
              {"newton_rel_tol", p.newton_rel_tol},
              {"max_newton_iters", p.max_newton_iters},
              {"line_search", p.line_search},
              {"integrator", to_string(p.integrator)},
              {"newmark_beta", p.newmark_beta},
              {"newmark_gamma", p.newmark_gamma},
              {"static", p.static_flag},
              {"static_ramp_steps", p.static_ramp_steps},
              {"two_d", p.two_d},
              {"solver", to_string(p.solver)},
              {"pseudo_inverse", p.pseudo_inverse},
              {"max_dt_halvings", p.max_dt_halvings},
              {"threads", p.threads}};

  const auto& cs = c.constraints;
  json k{{"fixed_nodes", cs.fixed_nodes}, {"fixed_edges", cs.fixed_edges}};
  k["fixed_axes"] = json::array();
  for (const auto& f : cs.fixed_axes) k["fixed_axes"].push_back({{"node", f.node}, {"axes", f.axes}});
  if (cs.fixed_within)
    k["fixed_within"] = {{"center", vec_json(cs.fixed_within->first)}, {"radius", cs.fixed_within->second}};
  k["moves"] = json::array();
  for (const auto& m : cs.moves)
    k["moves"].push_back(
        {{"node", m.node}, {"displacement", vec_json(m.displacement)}, {"schedule", schedule_json(m.schedule)}});
  k["twists"] = json::array();
  for (const auto& t : cs.twists)
    k["twists"].push_back({{"edge", t.edge}, {"angle", t.angle}, {"schedule", schedule_json(t.schedule)}});
  j["constraints"] = k;

  const auto& cp = c.contact;
  j["contact"] = {{"enabled", cp.enabled},   {"delta", cp.delta},       {"mu", cp.mu},
                  {"nu_slip", cp.nu_slip},   {"k_c", cp.k_c},           {"margin", cp.margin},
                  {"friction", cp.friction}, {"exclusion_hops", cp.exclusion_hops}};
  j["ground"] = {{"enabled", c.ground.enabled}, {"height", c.ground.height}, {"mu", c.ground.mu}};
  if (!c.actuation.type.empty()) j["actuation"] = actuation_json(c.actuation);

  if (c.controller.enabled) {
    const auto& pi = c.controller.pi;
    auto gains = [](const PIGains& g) {
      return json{{"k_p", g.k_p},
                  {"k_i", g.k_i},
                  {"rate_limit", limit_json(g.rate_limit)},
                  {"integral_clamp", limit_json(g.integral_clamp)}};
    };
    const auto& r = c.controller.reference;
    json ref{{"type", r.type}};
    if (r.type == "shape") {
      ref["shape"] = r.shape;
      ref["amplitude"] = r.amplitude;
    } else if (r.type == "simulate") {
      ref["actuation"] = actuation_json(r.actuation);
      ref["offset"] = r.offset;
      ref["sample_interval"] = r.sample_interval;
    } else {
      ref["file"] = r.file;
    }
    j["controller"] = {{"enabled", true},
                       {"stretch", gains(pi.stretch)},
                       {"bend", gains(pi.bend)},
                       {"control_stretch", pi.control_stretch},
                       {"control_bend", pi.control_bend},
                       {"smoothing_window", pi.smoothing_window},
                       {"every", pi.every},
                       {"reference", ref}};
  }
  j["output"] = {{"log_interval", c.output.log_interval},
                 {"directory", c.output.directory},
                 {"trajectory", c.output.trajectory},
                 {"tip_node", c.output.tip_node},
                 {"head_node", c.output.head_node}};
  return j.dump(2) + "\n";
}

}  // namespace rodshell
