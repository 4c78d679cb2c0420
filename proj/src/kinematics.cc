#include "bevsim/kinematics.h"

#include <cmath>
#include <cstdio>

namespace bevsim {
namespace {

// Segments shorter than this carry no usable heading information.
constexpr double kMinObservableSegment = 1e-3;
// Turning angles recovered from rounded positions carry ~1e-11 rad of noise
// over short segments, so the implied steering gets a wider margin.
constexpr double kImpliedSteeringSlack = 1e-6;

std::string Format(const char* fmt, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), fmt, a, b);
  return buf;
}

}  // namespace

std::string_view ToString(AgentCategory category) {
  switch (category) {
    case AgentCategory::kCar: return "CAR";
    case AgentCategory::kTruck: return "TRUCK";
    case AgentCategory::kBus: return "BUS";
    case AgentCategory::kPedestrian: return "PEDESTRIAN";
    case AgentCategory::kStaticObstacle: return "STATIC_OBSTACLE";
  }
  return "?";
}

std::optional<AgentCategory> ParseAgentCategory(std::string_view name) {
  for (AgentCategory c : {AgentCategory::kCar, AgentCategory::kTruck, AgentCategory::kBus,
                          AgentCategory::kPedestrian, AgentCategory::kStaticObstacle}) {
    if (ToString(c) == name) return c;
  }
  return std::nullopt;
}

bool IsVehicle(AgentCategory category) {
  return category == AgentCategory::kCar || category == AgentCategory::kTruck ||
         category == AgentCategory::kBus;
}

void KinematicParams::Validate() const {
  if (!(wheelbase > 0.0) || !std::isfinite(wheelbase)) {
    throw InvalidArgument("kinematics.L must be positive");
  }
  if (!(delta_max > 0.0 && delta_max < kPi / 2.0)) {
    throw InvalidArgument("kinematics.delta_max must lie in (0, pi/2)");
  }
  if (!(v_min >= 0.0)) throw InvalidArgument("kinematics.v_min must be >= 0");
  if (!(v_max > v_min) || !std::isfinite(v_max)) {
    throw InvalidArgument("kinematics.v_max must exceed v_min");
  }
  if (!(a_max > 0.0) || !std::isfinite(a_max)) {
    throw InvalidArgument("kinematics.a_max must be positive");
  }
}

std::optional<KinematicParams> DefaultKinematicParams(AgentCategory category) {
  switch (category) {
    case AgentCategory::kCar:
      return KinematicParams{2.8, 0.6, 20.0, 0.0, 4.0};
    case AgentCategory::kTruck:
    case AgentCategory::kBus:
      return KinematicParams{5.5, 0.45, 16.0, 0.0, 2.5};
    case AgentCategory::kPedestrian:
    case AgentCategory::kStaticObstacle:
      return std::nullopt;
  }
  return std::nullopt;
}

std::string_view ToString(EnvelopeBound bound) {
  switch (bound) {
    case EnvelopeBound::kSteering: return "steering";
    case EnvelopeBound::kSpeed: return "speed";
    case EnvelopeBound::kAcceleration: return "acceleration";
  }
  return "?";
}

EnvelopeViolation::EnvelopeViolation(EnvelopeBound bound, std::size_t step_index,
                                     const std::string& detail)
    : Error("envelope violation (" + std::string(ToString(bound)) + ") at step " +
            std::to_string(step_index) + ": " + detail),
      bound_(bound),
      step_index_(step_index),
      detail_(detail) {}

double HeadingIncrement(double v, double delta, double dt, double wheelbase) {
  return (v / wheelbase) * std::tan(delta) * dt;
}

AgentState Step(const AgentState& state, const ControlInput& u, double dt,
                const KinematicParams& params) {
  if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
  if (std::abs(u.delta) > params.delta_max + kEnvelopeSlack) {
    throw EnvelopeViolation(EnvelopeBound::kSteering, 0,
                            Format("|delta|=%.6f exceeds delta_max=%.6f", std::abs(u.delta),
                                   params.delta_max));
  }
  if (u.v < params.v_min - kEnvelopeSlack || u.v > params.v_max + kEnvelopeSlack) {
    throw EnvelopeViolation(EnvelopeBound::kSpeed, 0,
                            Format("v=%.6f outside [v_min, %.6f]", u.v, params.v_max));
  }
  if (std::abs(u.v - state.v) > params.a_max * dt + kEnvelopeSlack) {
    throw EnvelopeViolation(EnvelopeBound::kAcceleration, 0,
                            Format("|dv|=%.6f exceeds a_max*dt=%.6f", std::abs(u.v - state.v),
                                   params.a_max * dt));
  }

  AgentState next;
  const double travel = u.v * dt;
  next.pose.x = state.pose.x + travel * std::cos(state.pose.theta);
  next.pose.y = state.pose.y + travel * std::sin(state.pose.theta);
  next.pose.theta =
      NormalizeAngle(state.pose.theta + HeadingIncrement(u.v, u.delta, dt, params.wheelbase));
  next.v = u.v;
  next.delta = u.delta;
  next.t = state.t + dt;
  return next;
}

std::vector<AgentState> Rollout(const AgentState& initial, std::span<const ControlInput> controls,
                                double dt, const KinematicParams& params) {
  if (controls.empty()) throw InvalidArgument("rollout needs at least one control");
  std::vector<AgentState> states;
  states.reserve(controls.size() + 1);
  states.push_back(initial);
  for (std::size_t k = 0; k < controls.size(); ++k) {
    try {
      states.push_back(Step(states.back(), controls[k], dt, params));
    } catch (const EnvelopeViolation& e) {
      throw e.AtStep(k);
    }
  }
  return states;
}

std::string_view ToString(KinematicConstraint constraint) {
  switch (constraint) {
    case KinematicConstraint::kSpeed: return "speed";
    case KinematicConstraint::kAcceleration: return "acceleration";
    case KinematicConstraint::kSteering: return "steering";
  }
  return "?";
}

KinematicVerdict CheckTrajectoryKinematics(std::span<const TimedPoint> traj,
                                           const KinematicParams& params) {
  const std::size_t n = traj.size();
  if (n < 3) throw MalformedTrajectory("kinematic check needs at least three samples");
  for (std::size_t i = 1; i < n; ++i) {
    if (!(traj[i].t > traj[i - 1].t)) {
      throw MalformedTrajectory("timestamps not strictly increasing at index " +
                                std::to_string(i));
    }
  }

  std::vector<double> length(n - 1);
  std::vector<double> speed(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    length[i] = Distance(traj[i].p, traj[i + 1].p);
    speed[i] = length[i] / (traj[i + 1].t - traj[i].t);
  }

  auto fail = [](std::size_t index, KinematicConstraint c, std::string detail) {
    return KinematicVerdict{false, index, c, std::move(detail)};
  };

  for (std::size_t i = 0; i < n; ++i) {
    if (i + 1 < n) {
      if (speed[i] > params.v_max + kEnvelopeSlack || speed[i] < params.v_min - kEnvelopeSlack) {
        return fail(i, KinematicConstraint::kSpeed,
                    Format("segment speed %.6f outside [v_min, v_max=%.6f]", speed[i],
                           params.v_max));
      }
    }
    if (i == 0 || i + 1 >= n) continue;

    // Speed change between the segments meeting at vertex i, over the time
    // between their midpoints.
    const double dt_mid = 0.5 * (traj[i + 1].t - traj[i - 1].t);
    const double dv = std::abs(speed[i] - speed[i - 1]);
    if (dv > params.a_max * dt_mid + kEnvelopeSlack) {
      return fail(i, KinematicConstraint::kAcceleration,
                  Format("speed change %.6f exceeds a_max*dt=%.6f", dv, params.a_max * dt_mid));
    }

    if (length[i - 1] < kMinObservableSegment || length[i] < kMinObservableSegment) continue;
    const Vec2 in = traj[i].p - traj[i - 1].p;
    const Vec2 out = traj[i + 1].p - traj[i].p;
    const double turn = std::atan2(in.Cross(out), in.Dot(out));
    const double curvature = turn / length[i - 1];
    const double steering = std::atan(params.wheelbase * curvature);
    if (std::abs(steering) > params.delta_max + kImpliedSteeringSlack) {
      return fail(i, KinematicConstraint::kSteering,
                  Format("implied steering %.6f exceeds delta_max=%.6f", std::abs(steering),
                         params.delta_max));
    }
  }
  return {};
}

}  // namespace bevsim
