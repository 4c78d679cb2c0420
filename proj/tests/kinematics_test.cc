#include "bevsim/kinematics.h"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace bevsim {
namespace {

const KinematicParams kCar = *DefaultKinematicParams(AgentCategory::kCar);

TEST(KinematicParams, CategoryDefaults) {
  EXPECT_EQ(kCar, (KinematicParams{2.8, 0.6, 20.0, 0.0, 4.0}));
  const KinematicParams truck = *DefaultKinematicParams(AgentCategory::kTruck);
  EXPECT_EQ(truck, (KinematicParams{5.5, 0.45, 16.0, 0.0, 2.5}));
  EXPECT_EQ(*DefaultKinematicParams(AgentCategory::kBus), truck);
  EXPECT_FALSE(DefaultKinematicParams(AgentCategory::kPedestrian));
  EXPECT_FALSE(DefaultKinematicParams(AgentCategory::kStaticObstacle));
}

TEST(KinematicParams, ValidateRejectsEachBrokenField) {
  auto broken = [](auto mutate) {
    KinematicParams k = kCar;
    mutate(k);
    return k;
  };
  EXPECT_THROW(broken([](KinematicParams& k) { k.wheelbase = 0.0; }).Validate(), InvalidArgument);
  EXPECT_THROW(broken([](KinematicParams& k) { k.delta_max = kPi / 2.0; }).Validate(), InvalidArgument);
  EXPECT_THROW(broken([](KinematicParams& k) { k.delta_max = 0.0; }).Validate(), InvalidArgument);
  EXPECT_THROW(broken([](KinematicParams& k) { k.v_min = 25.0; }).Validate(), InvalidArgument);
  EXPECT_THROW(broken([](KinematicParams& k) { k.v_min = -1.0; }).Validate(), InvalidArgument);
  EXPECT_THROW(broken([](KinematicParams& k) { k.a_max = 0.0; }).Validate(), InvalidArgument);
  EXPECT_NO_THROW(kCar.Validate());
}

TEST(Step, StraightStepKeepsHeadingExactly) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> th(-kPi, kPi);
  std::uniform_real_distribution<double> v(0.0, 20.0);
  for (int i = 0; i < 1000; ++i) {
    const double speed = v(rng);
    const AgentState s{{1.0, 2.0, NormalizeAngle(th(rng))}, speed, 0.0, 0.0};
    const AgentState n = Step(s, {speed, 0.0}, 0.1, kCar);
    EXPECT_EQ(n.pose.theta, s.pose.theta);
  }
}

TEST(Step, HeadingIncrementMatchesBicycleFormula) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> v(0.0, 20.0);
  std::uniform_real_distribution<double> d(-0.6, 0.6);
  for (int i = 0; i < 1000; ++i) {
    const double speed = v(rng);
    const double delta = d(rng);
    EXPECT_EQ(HeadingIncrement(speed, delta, 0.1, 2.8), (speed / 2.8) * std::tan(delta) * 0.1);
    const AgentState s{{0.0, 0.0, 0.3}, speed, 0.0, 0.0};
    const AgentState n = Step(s, {speed, delta}, 0.1, kCar);
    EXPECT_EQ(n.pose.theta, NormalizeAngle(0.3 + (speed / 2.8) * std::tan(delta) * 0.1));
    // Position advances along the pre-step heading.
    EXPECT_EQ(n.pose.x, speed * 0.1 * std::cos(0.3));
    EXPECT_EQ(n.pose.y, speed * 0.1 * std::sin(0.3));
  }
}

TEST(Step, PositiveSteeringTurnsLeft) {
  const AgentState n = Step({{0.0, 0.0, 0.0}, 5.0, 0.0, 0.0}, {5.0, 0.3}, 0.1, kCar);
  EXPECT_GT(n.pose.theta, 0.0);
}

TEST(Step, EnvelopeViolationsAreRejected) {
  const AgentState s{{0.0, 0.0, 0.0}, 10.0, 0.0, 0.0};
  try {
    Step(s, {10.0, 0.7}, 0.1, kCar);
    FAIL();
  } catch (const EnvelopeViolation& e) {
    EXPECT_EQ(e.bound(), EnvelopeBound::kSteering);
  }
  try {
    Step(s, {21.0, 0.0}, 0.1, kCar);
    FAIL();
  } catch (const EnvelopeViolation& e) {
    EXPECT_EQ(e.bound(), EnvelopeBound::kSpeed);
  }
  try {
    Step(s, {10.5, 0.0}, 0.1, kCar);
    FAIL();
  } catch (const EnvelopeViolation& e) {
    EXPECT_EQ(e.bound(), EnvelopeBound::kAcceleration);
  }
  EXPECT_THROW(Step(s, {10.0, 0.0}, 0.0, kCar), InvalidArgument);
}

TEST(Step, IsDeterministic) {
  const AgentState s{{1.5, -2.0, 0.4}, 7.0, 0.1, 3.0};
  const AgentState a = Step(s, {7.2, -0.2}, 0.1, kCar);
  const AgentState b = Step(s, {7.2, -0.2}, 0.1, kCar);
  EXPECT_EQ(a, b);
}

TEST(Rollout, ReportsOffendingControlIndex) {
  const std::vector<ControlInput> controls{{5.0, 0.0}, {5.1, 0.0}, {9.0, 0.0}};
  try {
    Rollout({{0.0, 0.0, 0.0}, 5.0, 0.0, 0.0}, controls, 0.1, kCar);
    FAIL();
  } catch (const EnvelopeViolation& e) {
    EXPECT_EQ(e.step_index(), 2u);
  }
}

TEST(Rollout, FullRevolutionStaysNearTheTurningCircle) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> v(1.0, 20.0);
  std::uniform_real_distribution<double> d(0.05, 0.6);
  for (int i = 0; i < 200; ++i) {
    const double speed = v(rng);
    const double delta = d(rng) * (i % 2 ? 1.0 : -1.0);
    const double dt = 0.1;
    const double radius = kCar.wheelbase / std::abs(std::tan(delta));
    const auto steps = static_cast<std::size_t>(
        std::ceil(2.0 * kPi / std::abs(HeadingIncrement(speed, delta, dt, kCar.wheelbase))));
    const std::vector<ControlInput> controls(steps, ControlInput{speed, delta});
    const Pose2 start{3.0, -1.0, 0.25};
    const auto states = Rollout({start, speed, delta, 0.0}, controls, dt, kCar);
    // Center of the oracle circle sits on the start pose's normal.
    const double side = delta > 0.0 ? 1.0 : -1.0;
    const Vec2 center = start.position() + Vec2{-std::sin(start.theta), std::cos(start.theta)} * (side * radius);
    double worst = 0.0;
    for (const AgentState& s : states) {
      worst = std::max(worst, std::abs(Distance(s.pose.position(), center) - radius));
    }
    EXPECT_LE(worst, speed * dt);
    EXPECT_NEAR(NormalizeAngle(states.back().pose.theta - start.theta),
                NormalizeAngle(steps * HeadingIncrement(speed, delta, dt, kCar.wheelbase)), 1e-9);
  }
}

TimedPath PathOf(const std::vector<AgentState>& states, double dt) {
  TimedPath out;
  for (std::size_t k = 0; k < states.size(); ++k) out.push_back({dt * k, states[k].pose.position()});
  return out;
}

TEST(CheckTrajectoryKinematics, AcceptsEveryInEnvelopeRollout) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < 300; ++i) {
    std::vector<ControlInput> controls;
    double v = 2.0 + 10.0 * unit(rng);
    double delta = 0.0;
    for (int k = 0; k < 60; ++k) {
      v = std::clamp(v + (unit(rng) - 0.5) * 0.7, 0.5, 19.5);
      delta = std::clamp(delta + (unit(rng) - 0.5) * 0.2, -0.55, 0.55);
      controls.push_back({v, delta});
    }
    const auto states = Rollout({{0.0, 0.0, 0.0}, controls.front().v, 0.0, 0.0}, controls, 0.1, kCar);
    const KinematicVerdict verdict = CheckTrajectoryKinematics(PathOf(states, 0.1), kCar);
    EXPECT_TRUE(verdict.feasible) << verdict.detail;
  }
}

TEST(CheckTrajectoryKinematics, FlagsEachConstraint) {
  // Too fast.
  TimedPath fast;
  for (int k = 0; k < 5; ++k) fast.push_back({0.1 * k, {2.5 * k, 0.0}});
  KinematicVerdict v = CheckTrajectoryKinematics(fast, kCar);
  EXPECT_FALSE(v.feasible);
  EXPECT_EQ(v.constraint, KinematicConstraint::kSpeed);

  // Speed jump from 5 to 10 m/s in one step.
  TimedPath jump{{0.0, {0.0, 0.0}}, {0.1, {0.5, 0.0}}, {0.2, {1.5, 0.0}}};
  v = CheckTrajectoryKinematics(jump, kCar);
  EXPECT_FALSE(v.feasible);
  EXPECT_EQ(v.constraint, KinematicConstraint::kAcceleration);

  // 90 degree corner at constant speed.
  TimedPath corner{{0.0, {0.0, 0.0}}, {0.1, {1.0, 0.0}}, {0.2, {1.0, 1.0}}};
  v = CheckTrajectoryKinematics(corner, kCar);
  EXPECT_FALSE(v.feasible);
  EXPECT_EQ(v.constraint, KinematicConstraint::kSteering);
  EXPECT_EQ(v.index, 1u);

  EXPECT_THROW(CheckTrajectoryKinematics(TimedPath{{0.0, {}}, {0.1, {}}}, kCar), MalformedTrajectory);
}

}  // namespace
}  // namespace bevsim
