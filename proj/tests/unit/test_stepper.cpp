#include "builders.hpp"
#include "fd.hpp"
#include "rodshell/log.hpp"
#include "rodshell/stepper.hpp"

#include <gtest/gtest.h>

#include <Eigen/SVD>

#include <cmath>
#include <numbers>

using namespace rodshell;
using namespace testing_util;

namespace {

constexpr double pi = std::numbers::pi;

MatX dense(const TripletList& t, int n) {
  MatX m = MatX::Zero(n, n);
  for (const auto& e : t) m(e.row(), e.col()) += e.value();
  return m;
}

std::shared_ptr<Environment> env_of(const SoftRobot& r, EnvironmentSpec s) {
  return std::make_shared<Environment>(r, s);
}

EnvironmentSpec no_gravity() {
  EnvironmentSpec s;
  s.gravity = false;
  return s;
}

SoftRobot bent_rod(int n, double length, double E = 1e6) {
  MeshInput m = straight_chain(n, length);
  for (int i = 0; i < n; ++i) m.nodes[i].y() = 0.05 * length * std::sin(2.0 * i / n);
  return build_robot(m, geometry(0.005), material(E), ShellModel::Hinge);
}

}  // namespace

TEST(LinearSolve, IdentityReturnsRightHandSide) {
  TripletList I;
  for (int i = 0; i < 5; ++i) I.emplace_back(i, i, 1.0);
  const VecX f = VecX::LinSpaced(5, 1, 5);
  EXPECT_EQ(linear_solve(5, I, f, SolverKind::Dense), f);
  EXPECT_EQ(linear_solve(5, I, f, SolverKind::Sparse), f);
}

TEST(LinearSolve, DenseAndSparseAgreeOnSpd) {
  std::srand(7);
  const MatX B = MatX::Random(50, 50);
  const MatX A = B * B.transpose() + 50.0 * MatX::Identity(50, 50);
  TripletList t;
  for (int i = 0; i < 50; ++i)
    for (int j = 0; j < 50; ++j) t.emplace_back(i, j, A(i, j));
  const VecX f = VecX::Random(50);
  const VecX xd = linear_solve(50, t, f, SolverKind::Dense), xs = linear_solve(50, t, f, SolverKind::Sparse);
  EXPECT_LT((xd - xs).norm(), 1e-10 * xd.norm());
  EXPECT_LT((A * xd - f).norm(), 1e-10 * f.norm());
}

TEST(LinearSolve, SingularFallsBackToMinimumNorm) {
  std::srand(8);
  const MatX U = MatX::Random(20, 12);
  const MatX A = U * U.transpose();  // rank 12
  TripletList t;
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 20; ++j) t.emplace_back(i, j, A(i, j));
  const VecX f = VecX::Random(20);
  for (SolverKind kind : {SolverKind::Dense, SolverKind::Sparse}) {
    LinearSolveInfo info;
    const VecX x = linear_solve(20, t, f, kind, true, &info);
    EXPECT_TRUE(info.used_pseudo_inverse);
    // normal equations and minimum norm
    EXPECT_LT((A.transpose() * (A * x - f)).norm(), 1e-9 * f.norm() * A.norm());
    const VecX ref = A.jacobiSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(f);
    EXPECT_LT((x - ref).norm(), 1e-8 * ref.norm());
  }
  EXPECT_THROW(linear_solve(20, t, f, SolverKind::Dense, false), SolverError);
}

TEST(Constraints, FixedNodesLeaveTheSystem) {
  const SoftRobot r = bent_rod(6, 0.5);
  ConstraintSet c(r);
  const size_t n = c.free_dofs().size();
  c.fix_nodes({0}, r.q0);
  EXPECT_EQ(c.free_dofs().size(), n - 3);
  c.fix_nodes({0}, r.q0);
  EXPECT_EQ(c.free_dofs().size(), n - 3);
  EXPECT_THROW(c.move_node(0, Vec3(1, 0, 0), {}, r.q0), ConfigError);
  EXPECT_THROW(c.fix_nodes({6}, r.q0), ConfigError);
  EXPECT_THROW(c.fix_edges({9}, r.q0), ConfigError);
  c.fix_edges({0}, r.q0);
  EXPECT_EQ(c.free_dofs().size(), n - 4);
}

TEST(Constraints, TwoDFlagFixesZAndTwist) {
  SoftRobot r = bent_rod(5, 0.5);
  SimParams p;
  p.two_d = true;
  TimeStepper s(r, p, env_of(r, no_gravity()));
  EXPECT_EQ(s.constraints().free_dofs().size(), static_cast<size_t>(2 * r.n_nodes()));
}

TEST(TimeStepper, FreeFallIsExactInOneIteration) {
  SoftRobot r = build_robot(straight_chain(3, 0.2), geometry(0.01), material(), ShellModel::Hinge);
  for (Integrator integ : {Integrator::ImplicitEuler, Integrator::NewmarkBeta, Integrator::ImplicitMidpoint}) {
    SimParams p;
    p.dt = 0.01;
    p.integrator = integ;
    p.newton_tol = 1e-9;
    TimeStepper s(r, p, env_of(r, {}));
    for (int k = 0; k < 10; ++k) {
      const StepDiagnostics d = s.step();
      EXPECT_LE(d.newton_iters, 1) << to_string(integ);
    }
    const double t = s.state().t;
    for (int i = 0; i < 3; ++i) {
      EXPECT_NEAR(s.state().u[3 * i + 2], -9.81 * t, 1e-10) << to_string(integ);
      if (integ != Integrator::ImplicitEuler)
        EXPECT_NEAR(s.state().q[3 * i + 2], -0.5 * 9.81 * t * t, 1e-10) << to_string(integ);
    }
  }
}

TEST(TimeStepper, RestStateNeedsNoIterations) {
  SoftRobot r = bent_rod(6, 0.5);
  TimeStepper s(r, SimParams{}, env_of(r, no_gravity()));
  const StepDiagnostics d = s.step();
  EXPECT_EQ(d.newton_iters, 0);
  EXPECT_LT(d.residual, 1e-10);
  EXPECT_EQ(s.state().q, r.q0);
}

TEST(TimeStepper, EulerVelocityIdentity) {
  SoftRobot r = bent_rod(8, 0.4);
  SimParams p;
  p.dt = 1e-3;
  TimeStepper s(r, p, env_of(r, {}));
  s.constraints().fix_nodes({0, 1}, r.q0);
  for (int k = 0; k < 5; ++k) {
    const VecX q = s.state().q;
    s.step();
    EXPECT_LT((s.state().u * p.dt - (s.state().q - q)).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(TimeStepper, ResidualJacobianMatchesFiniteDifferences) {
  fd::Rng rng(41);
  EnvironmentSpec env;
  env.damping = 0.3;
  env.rft = true;
  env.rft_params = {0.2, 0.9, true};
  for (Integrator integ : {Integrator::ImplicitEuler, Integrator::NewmarkBeta, Integrator::ImplicitMidpoint}) {
    for (bool stat : {false, true}) {
      SoftRobot r = bent_rod(7, 0.3);
      SimParams p;
      p.integrator = integ;
      p.static_flag = stat;
      p.dt = 0.01;
      TimeStepper s(r, p, env_of(r, env));
      RobotState prev = s.state();
      prev.u = 0.1 * VecX::Random(r.ndof());
      prev.a = VecX::Random(r.ndof());
      const VecX x = prev.q + 1e-3 * VecX::Random(r.ndof());
      const auto L = s.linearize(prev, x, p.dt, p.dt, 1.0, true);
      const MatX Jfd = fd::jacobian([&](const VecX& y) { return s.linearize(prev, y, p.dt, p.dt, 1.0, false).f; }, x,
                                    VecX::Constant(r.ndof(), 1e-7));
      EXPECT_LT(fd::rel_error(dense(L.J, r.ndof()), Jfd), 1e-5) << to_string(integ) << " static=" << stat;
    }
  }
}

TEST(TimeStepper, ResidualIsSumOfModuleOutputs) {
  SoftRobot r = bent_rod(7, 0.3);
  EnvironmentSpec es;
  es.damping = 0.5;
  auto env = env_of(r, es);
  SimParams p;
  TimeStepper s(r, p, env);
  RobotState prev = s.state();
  prev.u = VecX::Random(r.ndof());
  const VecX x = prev.q + 1e-3 * VecX::Random(r.ndof());
  const VecX f = s.linearize(prev, x, p.dt, p.dt, 1.0, false).f;
  const VecX v = (x - prev.q) / p.dt;
  EnergyContribution ext(r.ndof());
  env->add({x, v, prev.q, p.dt, p.dt, 1.0, 1.0 / p.dt}, ext);
  const VecX expect = r.mass.cwiseProduct((x - prev.q) / p.dt - prev.u) / p.dt -
                      assemble_elastic(r, x, prev.frames).force - ext.force;
  EXPECT_LT((f - expect).cwiseAbs().maxCoeff(), 1e-12 * expect.cwiseAbs().maxCoeff());
}

TEST(TimeStepper, PrescribedMotionIsExact) {
  SoftRobot r = bent_rod(6, 0.3);
  SimParams p;
  p.dt = 1e-3;
  TimeStepper s(r, p, env_of(r, {}));
  Schedule sine;
  sine.shape = Schedule::Shape::Sine;
  sine.frequency = 5.0;
  s.constraints().move_node(0, Vec3(0, 0.01, 0), sine, r.q0);
  for (int k = 0; k < 20; ++k) {
    s.step();
    const double t = s.state().t;
    EXPECT_EQ(s.state().q[1], r.q0[1] + 0.01 * std::sin(2 * pi * 5.0 * t));
  }
}

TEST(TimeStepper, AllFixedIsANoOp) {
  SoftRobot r = bent_rod(4, 0.3);
  TimeStepper s(r, SimParams{}, env_of(r, {}));
  for (int i = 0; i < r.ndof(); ++i) s.constraints().fix_dof(i, r.q0[i]);
  const StepDiagnostics d = s.step();
  EXPECT_EQ(d.newton_iters, 0);
  EXPECT_EQ(s.state().q, r.q0);
}

TEST(TimeStepper, ReactionsBalanceWeight) {
  SoftRobot r = bent_rod(11, 0.2, 1e8);
  SimParams p;
  p.static_flag = true;
  p.newton_tol = 1e-12;
  TimeStepper s(r, p, env_of(r, {}));
  s.constraints().fix_nodes({0, 1}, r.q0);
  s.constraints().fix_edges({0}, r.q0);
  s.step();
  const VecX& f = s.last_residual();
  const double reaction_z = f[2] + f[5];
  EXPECT_NEAR(reaction_z, 9.81 * r.mass.head(3 * r.n_nodes()).sum() / 3.0, 1e-9);
}

TEST(TimeStepper, StaticResultIndependentOfRampCount) {
  VecX results[2];
  int k = 0;
  for (int ramp : {1, 5}) {
    SoftRobot r = bent_rod(11, 0.2, 1e8);
    SimParams p;
    p.static_flag = true;
    p.static_ramp_steps = ramp;
    p.newton_tol = 1e-10;
    p.newton_rel_tol = 0.0;
    TimeStepper s(r, p, env_of(r, {}));
    s.constraints().fix_nodes({0, 1}, r.q0);
    s.constraints().fix_edges({0}, r.q0);
    s.step();
    // theta depends on the reference-frame gauge, so compare positions
    results[k++] = s.state().q.head(3 * r.n_nodes());
  }
  EXPECT_LT((results[0] - results[1]).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_GT((results[0] - bent_rod(11, 0.2, 1e8).q0.head(33)).norm(), 1e-6);
}

TEST(TimeStepper, StaticNoLoadStaysAtRest) {
  SoftRobot r = bent_rod(6, 0.3);
  SimParams p;
  p.static_flag = true;
  TimeStepper s(r, p, env_of(r, no_gravity()));
  s.step();
  EXPECT_EQ(s.state().q, r.q0);
}

TEST(TimeStepper, NonConvergenceSurfacesAsStepFailure) {
  SoftRobot r = bent_rod(20, 0.2);
  SimParams p;
  p.dt = 10.0;
  p.total_time = 10.0;
  p.max_newton_iters = 1;
  p.newton_tol = 1e-14;
  p.newton_rel_tol = 0.0;
  TimeStepper s(r, p, env_of(r, {}));
  s.constraints().fix_nodes({0, 1}, r.q0);
  try {
    s.simulate(1, nullptr);
    FAIL() << "expected StepFailure";
  } catch (const StepFailure& e) {
    EXPECT_GT(e.residual(), 0.0);
    EXPECT_NE(std::string(e.what()).find("step 1"), std::string::npos);
  }
}

TEST(TimeStepper, EmptyHookAndThreadsDoNotChangeTrajectory) {
  auto run = [](bool hook, int threads) {
    SoftRobot r = bent_rod(12, 0.2);
    SimParams p;
    p.dt = 5e-3;
    p.total_time = 0.05;
    p.threads = threads;
    TimeStepper s(r, p, env_of(r, {}));
    s.constraints().fix_nodes({0, 1}, r.q0);
    if (hook) s.set_before_step([](SoftRobot&, ConstraintSet&, const RobotState&, double) {});
    std::vector<VecX> traj;
    s.simulate(1, [&](const RobotState& st, const StepDiagnostics&) { traj.push_back(st.q); });
    return traj;
  };
  const auto a = run(false, 1), b = run(true, 1), c = run(false, 1), d = run(false, 4);
  ASSERT_EQ(a.size(), 11u);
  for (size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i], b[i]);
    EXPECT_EQ(a[i], c[i]);
    EXPECT_EQ(a[i], d[i]);
  }
}

TEST(TimeStepper, LogFrameCount) {
  SoftRobot r = bent_rod(5, 0.2);
  SimParams p;
  p.dt = 0.01;
  p.total_time = 0.25;
  TimeStepper s(r, p, env_of(r, no_gravity()));
  int frames = 0;
  s.simulate(3, [&](const RobotState&, const StepDiagnostics&) { ++frames; });
  EXPECT_EQ(frames, static_cast<int>(std::floor(0.25 / (0.01 * 3))) + 1);
}

TEST(TimeStepper, NaturalStrainIncrementsApplyEachStep) {
  SoftRobot r = bent_rod(5, 0.2);
  r.stretch_springs[1].inc_strain = 0.01;
  r.bend_twist_springs[0].inc_curvature = Vec2(0.5, 0.0);
  TimeStepper s(r, SimParams{}, env_of(r, no_gravity()));
  s.step();
  s.step();
  EXPECT_DOUBLE_EQ(r.stretch_springs[1].nat_strain, 0.02);
}

TEST(TimeStepper, HalvingRecoversFromFailedStep) {
  SoftRobot r = bent_rod(20, 0.2);
  SimParams p;
  p.dt = 0.05;
  p.max_newton_iters = 3;
  p.max_dt_halvings = 4;
  set_warnings_quiet(true);
  TimeStepper s(r, p, env_of(r, {}));
  s.constraints().fix_nodes({0, 1}, r.q0);
  const StepDiagnostics d = s.step();
  set_warnings_quiet(false);
  EXPECT_GT(d.halvings, 0);
  EXPECT_NEAR(s.state().t, 0.05, 1e-15);
}
