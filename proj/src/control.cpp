#include "rodshell/control.hpp"

#include "rodshell/log.hpp"

#include <algorithm>
#include <cmath>

namespace rodshell {

StrainTargets measure_control_strains(const SoftRobot& robot, const VecX& q, const FrameSet& frames) {
  StrainFields f = measure_strains(robot, q, frames);
  return {std::move(f.stretch), std::move(f.bend)};
}

StrainTargets reference_strain_from_shape(const SoftRobot& robot, const std::vector<Vec3>& target_nodes) {
  if (static_cast<int>(target_nodes.size()) != robot.n_nodes())
    throw TopologyError("target shape has " + std::to_string(target_nodes.size()) + " nodes, robot has " +
                        std::to_string(robot.n_nodes()));
  VecX q = VecX::Zero(robot.ndof());
  for (int i = 0; i < robot.n_nodes(); ++i) q.segment<3>(3 * i) = target_nodes[i];
  // carry the rest frames over to the target so both share one frame gauge
  const FrameSet rest = init_reference_frames(robot, robot.q0);
  return measure_control_strains(robot, q, update_frames_after_step(robot, rest, q));
}

void ReferenceTrajectory::validate() const {
  if (times.empty()) throw ConfigError("reference trajectory is empty");
  if (strains.size() != times.size()) throw ConfigError("reference trajectory: one strain sample per time required");
  if (!shapes.empty() && shapes.size() != times.size())
    throw ConfigError("reference trajectory: one shape per time required");
  for (size_t k = 1; k < times.size(); ++k)
    if (!(times[k] > times[k - 1])) throw ConfigError("reference trajectory times must be strictly increasing");
  for (const auto& s : strains)
    if (s.stretch.size() != strains[0].stretch.size() || s.bend.size() != strains[0].bend.size())
      throw ConfigError("reference trajectory samples differ in size");
}

namespace {

// Bracketing sample k and weight w so that value = (1 - w) s[k] + w s[k + 1].
std::pair<size_t, double> bracket(const std::vector<double>& times, double t) {
  if (times.size() == 1 || t <= times.front()) return {0, 0.0};
  if (t >= times.back()) return {times.size() - 1, 0.0};
  const size_t k = std::upper_bound(times.begin(), times.end(), t) - times.begin() - 1;
  return {k, (t - times[k]) / (times[k + 1] - times[k])};
}

}  // namespace

StrainTargets ReferenceTrajectory::strain_at(double t) const {
  const auto [k, w] = bracket(times, t);
  if (w == 0.0) return strains[k];
  StrainTargets out = strains[k];
  const StrainTargets& b = strains[k + 1];
  for (size_t i = 0; i < out.stretch.size(); ++i) out.stretch[i] = (1 - w) * out.stretch[i] + w * b.stretch[i];
  for (size_t i = 0; i < out.bend.size(); ++i) out.bend[i] = (1 - w) * out.bend[i] + w * b.bend[i];
  return out;
}

std::optional<std::vector<Vec3>> ReferenceTrajectory::shape_at(double t) const {
  if (shapes.empty()) return std::nullopt;
  const auto [k, w] = bracket(times, t);
  if (w == 0.0) return shapes[k];
  std::vector<Vec3> out = shapes[k];
  for (size_t i = 0; i < out.size(); ++i) out[i] = (1 - w) * out[i] + w * shapes[k + 1][i];
  return out;
}

void PIControllerConfig::validate() const {
  if (smoothing_window < 1 || smoothing_window % 2 == 0) throw ConfigError("smoothing_window must be odd and >= 1");
  if (every < 1) throw ConfigError("controller 'every' must be >= 1");
  for (const PIGains* g : {&stretch, &bend}) {
    if (g->k_p < 0 || g->k_i < 0) throw ConfigError("controller gains must be non-negative");
    if (!(g->rate_limit > 0) || !(g->integral_clamp > 0)) throw ConfigError("controller limits must be positive");
  }
}

std::vector<double> smooth(const std::vector<double>& x, int window) {
  const int n = static_cast<int>(x.size()), half = window / 2;
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) {
    const int h = std::min({half, i, n - 1 - i});
    double s = 0.0;
    for (int j = i - h; j <= i + h; ++j) s += x[j];
    out[i] = s / (2 * h + 1);
  }
  return out;
}

std::vector<double> pi_update(const std::vector<double>& residual, std::vector<double>& integral, const PIGains& g,
                              int window, double dt) {
  const size_t n = residual.size();
  std::vector<double> raw(n);
  for (size_t i = 0; i < n; ++i) {
    integral[i] = std::clamp(integral[i] + residual[i] * dt, -g.integral_clamp, g.integral_clamp);
    raw[i] = g.k_p * residual[i] + g.k_i * integral[i];
  }
  std::vector<double> inc = window > 1 ? smooth(raw, window) : raw;
  for (double& v : inc) v = std::clamp(v, -g.rate_limit, g.rate_limit);
  return inc;
}

PIController::PIController(const SoftRobot& robot, PIControllerConfig config, ReferenceTrajectory reference)
    : cfg_(config), ref_(std::move(reference)) {
  cfg_.validate();
  ref_.validate();
  const StrainTargets& s0 = ref_.strains.front();
  if (s0.stretch.size() != robot.stretch_springs.size() || s0.bend.size() != robot.bend_twist_springs.size())
    throw TopologyError("reference strain fields do not match the robot's springs");
  if (!ref_.shapes.empty() && static_cast<int>(ref_.shapes.front().size()) != robot.n_nodes())
    throw TopologyError("reference shapes do not match the robot's nodes");
  i_stretch_.assign(robot.stretch_springs.size(), 0.0);
  i_bend_.assign(2 * robot.bend_twist_springs.size(), 0.0);
}

void PIController::update(SoftRobot& robot, const RobotState& state, double t_next, double dt) {
  if (calls_++ % cfg_.every != 0) return;
  if (ref_.times.size() > 1 && t_next > ref_.end_time() && !warned_) {
    warn("reference trajectory ends at t = " + std::to_string(ref_.end_time()) + "; holding the last sample");
    warned_ = true;
  }
  const double h = dt * cfg_.every;
  const StrainTargets ref = ref_.strain_at(t_next);
  const StrainTargets meas = measure_control_strains(robot, state.q, state.frames);
  last_max_inc_ = 0.0;

  if (cfg_.control_stretch) {
    std::vector<double> r(ref.stretch.size());
    for (size_t i = 0; i < r.size(); ++i) r[i] = ref.stretch[i] - meas.stretch[i];
    const auto inc = pi_update(r, i_stretch_, cfg_.stretch, cfg_.smoothing_window, h);
    for (size_t i = 0; i < inc.size(); ++i) {
      robot.stretch_springs[i].nat_strain += inc[i];
      last_max_inc_ = std::max(last_max_inc_, std::abs(inc[i]));
    }
  }
  if (cfg_.control_bend) {
    const size_t n = ref.bend.size();
    for (int c = 0; c < 2; ++c) {
      std::vector<double> r(n), integral(i_bend_.begin() + c * n, i_bend_.begin() + (c + 1) * n);
      for (size_t i = 0; i < n; ++i) r[i] = ref.bend[i][c] - meas.bend[i][c];
      const auto inc = pi_update(r, integral, cfg_.bend, cfg_.smoothing_window, h);
      std::copy(integral.begin(), integral.end(), i_bend_.begin() + c * n);
      for (size_t i = 0; i < n; ++i) {
        robot.bend_twist_springs[i].nat_curvature[c] += inc[i];
        last_max_inc_ = std::max(last_max_inc_, std::abs(inc[i]));
      }
    }
  }
}

double PIController::strain_residual(const SoftRobot& robot, const RobotState& state) const {
  const StrainTargets ref = ref_.strain_at(state.t);
  const StrainTargets meas = measure_control_strains(robot, state.q, state.frames);
  double s = 0.0;
  if (cfg_.control_stretch)
    for (size_t i = 0; i < ref.stretch.size(); ++i) s += std::pow(ref.stretch[i] - meas.stretch[i], 2);
  if (cfg_.control_bend)
    for (size_t i = 0; i < ref.bend.size(); ++i) s += (ref.bend[i] - meas.bend[i]).squaredNorm();
  return std::sqrt(s);
}

std::optional<double> PIController::nodal_rmse(const SoftRobot& robot, const RobotState& state) const {
  const auto shape = ref_.shape_at(state.t);
  if (!shape) return std::nullopt;
  double s = 0.0;
  for (int i = 0; i < robot.n_nodes(); ++i) s += (state.q.segment<3>(3 * i) - (*shape)[i]).squaredNorm();
  return std::sqrt(s / robot.n_nodes());
}

BeforeStepHook PIController::hook(double dt) {
  return [this, dt](SoftRobot& robot, ConstraintSet&, const RobotState& state, double t_next) {
    update(robot, state, t_next, dt);
  };
}

}  // namespace rodshell
