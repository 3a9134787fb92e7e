#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "flexjoint/analysis.hpp"
#include "flexjoint/control.hpp"
#include "flexjoint/random.hpp"

using namespace flexjoint;
using namespace flexjoint::control;

namespace {

constexpr double kPi = std::numbers::pi;

const plant::SimConfig kSim;

}  // namespace

TEST(Pd, Examples) {
  EXPECT_EQ(pd(2, 3, 1, -1), -1.0);
  EXPECT_EQ(pd(7, 9, 0, 0), 0.0);
  EXPECT_EQ(pd(52.19, 10.18, 1, 0), 52.19);
}

TEST(Pd, Homogeneous) {
  Rng rng(2);
  for (int i = 0; i < 1000; ++i) {
    const double kp = rng.uniform(0, 150), kd = rng.uniform(0, 30);
    const double e = rng.uniform(-3, 3), de = rng.uniform(-5, 5), a = rng.uniform(-10, 10);
    EXPECT_NEAR(pd(kp, kd, a * e, a * de), a * pd(kp, kd, e, de), 1e-12 * (1 + std::fabs(a * pd(kp, kd, e, de))));
  }
}

TEST(MotorReference, Examples) {
  const PlantParams p;
  EXPECT_NEAR(motor_reference(p, 0, 0), 0.05000352, 1e-15);
  EXPECT_NEAR(motor_reference(p, kPi / 2, 100), 1 + kPi / 2, 1e-12);
  EXPECT_EQ(motor_reference(p.without_gravity(), 0, 0), 0.0);
}

TEST(CascadedTorque, FromRestUnitStep) {
  const auto out = cascaded_torque({}, GainSet::tuned(), {}, {1, 0, 0});
  EXPECT_NEAR(out.diag.u_pd1, 52.19, 1e-12);
  EXPECT_NEAR(out.diag.x3d, 0.57190352, 1e-12);
  EXPECT_NEAR(out.diag.u_pd2, 144.5 * 0.57190352, 1e-10);
  EXPECT_NEAR(out.diag.u_pd2, 82.6401, 1e-4);
  EXPECT_NEAR(out.u, 139.830, 1e-3);
  EXPECT_EQ(out.diag.e1, 1.0);
  EXPECT_EQ(out.diag.e4, 0.0);
}

TEST(CascadedTorque, SetPointHoldsGravity) {
  const PlantParams p;
  Rng rng(4);
  for (int i = 0; i < 100; ++i) {
    const double x1d = rng.uniform(-kPi, kPi);
    const State s{x1d, 0, motor_reference(p, x1d, 0), 0};
    const auto out = cascaded_torque(p, GainSet::tuned(), s, {x1d, 0, 0});
    EXPECT_EQ(out.diag.e1, 0.0);
    EXPECT_EQ(out.diag.e2, 0.0);
    EXPECT_EQ(out.diag.e3, 0.0);
    EXPECT_EQ(out.diag.e4, 0.0);
    EXPECT_NEAR(out.u, p.mgl() * std::cos(x1d), 1e-12);
  }
}

TEST(CascadedTorque, ZeroWithoutGravity) {
  EXPECT_EQ(cascaded_torque(PlantParams{}.without_gravity(), GainSet::tuned(), {}, {}).u, 0.0);
}

TEST(FuzzyCascaded, ZeroErrorsGiveMidpoints) {
  const PlantParams p;
  const auto bounds = tuned_flr_bounds();
  const State s{0.3, 0, motor_reference(p, 0.3, 0), 0};
  const auto out = fuzzy_cascaded_torque(p, GainSet::tuned(), bounds, s, {0.3, 0, 0});
  EXPECT_NEAR(out.diag.delta.kp1, bounds.dkp1.midpoint(), 1e-12);
  EXPECT_NEAR(out.diag.delta.kd1, bounds.dkd1.midpoint(), 1e-12);
  EXPECT_NEAR(out.diag.delta.kp2, bounds.dkp2.midpoint(), 1e-12);
  EXPECT_NEAR(out.diag.delta.kd2, bounds.dkd2.midpoint(), 1e-12);
  EXPECT_NEAR(out.diag.effective.kp1, 52.19 + bounds.dkp1.midpoint(), 1e-12);
}

TEST(FuzzyCascaded, DegenerateBoundsMatchCascaded) {
  const PlantParams p;
  Rng rng(13);
  const Controller fuzzy(ControllerKind::fuzzy_cascaded, GainSet::tuned(), {});
  for (int i = 0; i < 1000; ++i) {
    const State s{rng.uniform(-3, 3), rng.uniform(-5, 5), rng.uniform(-3, 3), rng.uniform(-5, 5)};
    const RefSample r{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const auto a = fuzzy(p, s, r);
    const auto b = cascaded_torque(p, GainSet::tuned(), s, r);
    EXPECT_EQ(a.u, b.u);
    EXPECT_EQ(a.diag.x3d, b.diag.x3d);
    EXPECT_EQ(fuzzy_cascaded_torque(p, GainSet::tuned(), {}, s, r).u, b.u);
  }
}

TEST(FuzzyCascaded, EffectiveGainsWithinRanges) {
  const PlantParams p;
  const auto bounds = tuned_flr_bounds();
  const auto base = GainSet::tuned();
  Rng rng(21);
  for (int i = 0; i < 2000; ++i) {
    const State s{rng.uniform(-4, 4), rng.uniform(-8, 8), rng.uniform(-4, 4), rng.uniform(-8, 8)};
    const auto eff = fuzzy_cascaded_torque(p, base, bounds, s, {1, 0, 0}).diag.effective;
    EXPECT_GE(eff.kp1, base.kp1 + bounds.dkp1.lower());
    EXPECT_LE(eff.kp1, base.kp1 + bounds.dkp1.upper());
    EXPECT_GE(eff.kd1, base.kd1 + bounds.dkd1.lower());
    EXPECT_LE(eff.kd1, base.kd1 + bounds.dkd1.upper());
    EXPECT_GE(eff.kp2, base.kp2 + bounds.dkp2.lower());
    EXPECT_LE(eff.kp2, base.kp2 + bounds.dkp2.upper());
    EXPECT_GE(eff.kd2, base.kd2 + bounds.dkd2.lower());
    EXPECT_LE(eff.kd2, base.kd2 + bounds.dkd2.upper());
  }
}

TEST(FuzzyVariants, OnlyNamedLoopIsRegulated) {
  const PlantParams p;
  const State s{0.2, 0.5, 0.1, -0.4};
  const RefSample r{1, 0, 0};
  const auto f1 = Controller(ControllerKind::fuzzy1_pd2, GainSet::tuned(), tuned_flr_bounds())(p, s, r);
  const auto f2 = Controller(ControllerKind::pd1_fuzzy2, GainSet::tuned(), tuned_flr_bounds())(p, s, r);
  EXPECT_NE(f1.diag.delta.kp1, 0.0);
  EXPECT_EQ(f1.diag.delta.kp2, 0.0);
  EXPECT_EQ(f1.diag.delta.kd2, 0.0);
  EXPECT_EQ(f2.diag.delta.kp1, 0.0);
  EXPECT_EQ(f2.diag.delta.kd1, 0.0);
  EXPECT_NE(f2.diag.delta.kp2, 0.0);
}

TEST(SinglePd, Examples) {
  EXPECT_EQ(single_pd_torque({}, {}, {1, 0, 0}), 117.0);
  EXPECT_EQ(single_pd_torque({}, {1, 0, 0, 0}, {1, 0, 0}), 0.0);
  EXPECT_EQ(single_pd_torque({1, 0}, {0.5, 0, 0, 0}, {1, 0, 0}), 0.5);
}

TEST(Reference, Shapes) {
  const auto sq = Reference::square();
  EXPECT_EQ(sq(0).x1d, 1.0);
  EXPECT_EQ(sq(9.999).x1d, 1.0);
  EXPECT_EQ(sq(10.0).x1d, 0.0);
  EXPECT_EQ(sq(3).x1d_dot, 0.0);
  const auto sn = Reference::sine()(0.7);
  EXPECT_EQ(sn.x1d, std::sin(0.7));
  EXPECT_EQ(sn.x1d_dot, std::cos(0.7));
  EXPECT_EQ(sn.x1d_ddot, -std::sin(0.7));
  EXPECT_EQ(Reference::constant(0.4)(5).x1d, 0.4);
}

TEST(ControllerNames, RoundTrip) {
  for (auto k : {ControllerKind::single_pd, ControllerKind::cascaded_pd, ControllerKind::fuzzy_cascaded,
                 ControllerKind::fuzzy1_pd2, ControllerKind::pd1_fuzzy2}) {
    EXPECT_EQ(parse_controller(controller_name(k)), k);
  }
  EXPECT_FALSE(parse_controller("pid"));
}

TEST(Simulate, TunedCascadedSettles) {
  const auto traj = simulate({}, kSim, Controller(ControllerKind::cascaded_pd, GainSet::tuned()), Reference::square(),
                             plant::DisturbanceModel::off());
  ASSERT_EQ(traj.records.size(), 200u);
  EXPECT_LT(std::fabs(traj.records.back().e1), 1e-3);
  EXPECT_LT(std::fabs(1.0 - traj.final_state.x1), 1e-3);
}

TEST(Simulate, TunedFuzzySettles) {
  const auto traj = simulate({}, kSim, Controller(ControllerKind::fuzzy_cascaded, GainSet::tuned(), tuned_flr_bounds()),
                             Reference::square(), plant::DisturbanceModel::off());
  EXPECT_LT(std::fabs(traj.records.back().e1), 1e-3);
}

TEST(Simulate, RecordsEveryControlStep) {
  const auto traj = simulate({}, kSim, Controller(ControllerKind::cascaded_pd, GainSet::tuned()), Reference::square(),
                             plant::DisturbanceModel::uniform(10, 3));
  ASSERT_EQ(traj.records.size(), 200u);
  for (std::size_t i = 0; i < traj.records.size(); ++i) {
    EXPECT_NEAR(traj.records[i].t, 0.05 * static_cast<double>(i), 1e-12);
    EXPECT_EQ(traj.records[i].x1d, 1.0);
  }
  EXPECT_EQ(traj.records.front().state.x1, 0.0);
  EXPECT_EQ(traj.records.front().effective, GainSet::tuned());
}

// Replays the loop by hand to pin down the zero-order hold.
TEST(Simulate, ZeroOrderHold) {
  const PlantParams p;
  const auto dist = plant::DisturbanceModel::uniform(10, 9);
  const Controller c(ControllerKind::cascaded_pd, GainSet::tuned());
  const auto traj = simulate(p, {0.005, 0.05, 0.5}, c, Reference::square(), dist);
  State s;
  std::uint64_t k = 0;
  for (int step = 0; step < 10; ++step) {
    const double u = c(p, s, Reference::square()(0.05 * step)).u;
    EXPECT_EQ(traj.records[static_cast<std::size_t>(step)].u, u);
    EXPECT_EQ(traj.records[static_cast<std::size_t>(step)].state.x2, s.x2);
    for (int j = 0; j < 10; ++j, ++k) {
      const auto d = plant::disturbance_sample(dist, k);
      s = plant::euler_step(p, s, u, d.d1, d.d2, 0.005);
    }
  }
  EXPECT_EQ(traj.final_state.x1, s.x1);
  EXPECT_EQ(traj.final_state.x4, s.x4);
}

TEST(Simulate, Deterministic) {
  const Controller c(ControllerKind::fuzzy_cascaded, GainSet::tuned(), tuned_flr_bounds());
  const auto dist = plant::DisturbanceModel::uniform(10, 77);
  const auto a = simulate({}, kSim, c, Reference::square(), dist);
  const auto b = simulate({}, kSim, c, Reference::square(), dist);
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_EQ(a.records[i].u, b.records[i].u);
    EXPECT_EQ(a.records[i].state.x3, b.records[i].state.x3);
  }
}

TEST(Simulate, ZeroHorizon) {
  const State s0{0.1, 0, 0, 0};
  const auto traj = simulate({}, {0.005, 0.05, 0.0}, Controller(ControllerKind::cascaded_pd, GainSet::tuned()),
                             Reference::square(), plant::DisturbanceModel::off(), s0);
  EXPECT_TRUE(traj.records.empty());
  EXPECT_EQ(traj.initial_state.x1, 0.1);
  EXPECT_EQ(traj.final_state.x1, 0.1);
}

TEST(Simulate, PrintedSinglePdDiverges) {
  EXPECT_THROW(simulate({}, kSim, Controller::single({}), Reference::square(), plant::DisturbanceModel::off()),
               DivergenceError);
}

TEST(Simulate, UncontrolledArmStaysOffTarget) {
  const auto traj = simulate({}, kSim, Controller::single({0, 0}), Reference::square(), plant::DisturbanceModel::off());
  EXPECT_GT(std::fabs(traj.records.back().e1), 0.1);
}

TEST(Simulate, DivergenceNamesStep) {
  try {
    simulate({}, kSim, Controller::single({}), Reference::square(), plant::DisturbanceModel::off());
    FAIL() << "expected divergence";
  } catch (const DivergenceError& e) {
    EXPECT_GT(e.sim_step(), 0);
    EXPECT_NE(std::string(e.what()).find("sim step"), std::string::npos);
  }
}

// With g = 0 and the control applied every Euler step the closed loop is
// linear, and the recorded errors are an exact linear image T x of the
// state. They therefore follow Euler on T A T^-1 to rounding.
TEST(ErrorDynamics, RecordedErrorsFollowTransformedLoop) {
  const PlantParams p = PlantParams{}.without_gravity();
  const GainSet g = GainSet::tuned();
  const double dt = 0.005;
  const State s0{0.05, -0.1, 0.02, 0.3};
  const auto traj = simulate(p, {dt, dt, 2.0}, Controller(ControllerKind::cascaded_pd, g),
                             Reference::constant(0.0), plant::DisturbanceModel::off(), s0);
  const Eigen::Matrix4d A = analysis::closed_loop_state_matrix(p, g);
  const Eigen::Matrix4d T = analysis::error_coordinates(p, g);
  const Eigen::Matrix4d Ae = T * A * T.inverse();
  Eigen::Vector4d e = T * Eigen::Vector4d(s0.x1, s0.x2, s0.x3, s0.x4);
  for (const auto& r : traj.records) {
    EXPECT_NEAR(r.e1, e(0), 1e-9);
    EXPECT_NEAR(r.e2, e(1), 1e-9);
    EXPECT_NEAR(r.e3, e(2), 1e-9);
    EXPECT_NEAR(r.e4, e(3), 1e-9);
    e += dt * Ae * e;
  }
}
