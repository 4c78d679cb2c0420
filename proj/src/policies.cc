#include <algorithm>
#include <cmath>
#include <limits>

#include "bevsim/json_reader.h"
#include "bevsim/simulator.h"

namespace bevsim {

using nlohmann::json;

namespace {

// Speed command closest to `v` that Step accepts from `x`.
double ClampSpeed(double v, const AgentState& x, const KinematicParams& kp, double dt) {
  const double lo = std::max(kp.v_min, x.v - kp.a_max * dt);
  const double hi = std::min(kp.v_max, x.v + kp.a_max * dt);
  if (lo > hi) return x.v > kp.v_max ? hi : lo;
  return std::clamp(v, lo, hi);
}

double ClampSteering(double delta, const KinematicParams& kp) {
  return std::clamp(delta, -kp.delta_max, kp.delta_max);
}

// Steering that turns the heading from `from` to `to` over one step.
double SteeringFor(double from, double to, double travel, double previous,
                   const KinematicParams& kp) {
  if (travel <= 1e-9) return ClampSteering(previous, kp);
  return ClampSteering(std::atan(kp.wheelbase * NormalizeAngle(to - from) / travel), kp);
}

}  // namespace

ControlInput ExpertReplayPolicy::Act(const Observation& obs, std::uint64_t /*seed*/) const {
  const KinematicParams& kp = obs.ego_params;
  const AgentState& x = obs.ego;
  if (!obs.route || obs.step + 1 >= obs.route->size()) {
    return {ClampSpeed(x.v, x, kp, obs.dt), ClampSteering(x.delta, kp)};
  }
  const TrajectorySample& next = obs.route->samples[obs.step + 1];
  const Vec2 dir = UnitVector(x.pose.theta);
  const Vec2 to = next.pose.position() - x.pose.position();
  const double v = ClampSpeed(to.Dot(dir) / obs.dt, x, kp, obs.dt);

  // Cross-track error expected after this step, fed back into the heading
  // targeted for the next one.
  const Vec2 predicted = x.pose.position() + dir * (v * obs.dt);
  const double cross = (predicted - next.pose.position()).Dot(UnitVector(next.pose.theta + kPi / 2.0));
  const double lookahead = std::max(2.0, v);
  const double desired = next.pose.theta - std::atan(cross / lookahead);
  return {v, SteeringFor(x.pose.theta, desired, v * obs.dt, x.delta, kp)};
}

ControlInput ConstantControlPolicy::Act(const Observation& /*obs*/, std::uint64_t /*seed*/) const {
  return u_;
}

ControlInput LaneFollowIdmPolicy::Act(const Observation& obs, std::uint64_t /*seed*/) const {
  const KinematicParams& kp = obs.ego_params;
  const AgentState& x = obs.ego;
  const Vec2 pos = x.pose.position();
  const Vec2 dir = UnitVector(x.pose.theta);

  // Leader: closest agent ahead whose footprint reaches into our corridor.
  double gap = std::numeric_limits<double>::infinity();
  double leader_v = 0.0;
  for (const ObservedAgent& o : obs.others) {
    const Vec2 rel = o.pose.position() - pos;
    const double ahead = rel.Dot(dir);
    if (ahead <= 0.0) continue;
    const double side = std::abs(dir.Cross(rel));
    const Vec2 normal{-dir.y, dir.x};
    if (side - SupportExtent(o.footprint, normal) > obs.ego_half_width + 0.3) continue;
    const double g = ahead - obs.ego_half_length - SupportExtent(o.footprint, dir);
    if (g < gap) {
      gap = g;
      leader_v = o.v * std::cos(o.pose.theta - x.pose.theta);
    }
  }
  const double v0 = std::max(p_.desired_speed, 0.1);
  double accel = p_.max_accel * (1.0 - std::pow(x.v / v0, 4.0));
  if (std::isfinite(gap)) {
    const double s_star = p_.min_gap + x.v * p_.time_headway +
                          x.v * (x.v - leader_v) / (2.0 * std::sqrt(p_.max_accel * p_.comfortable_decel));
    const double g = std::max(gap, 0.1);
    accel -= p_.max_accel * std::pow(std::max(s_star, 0.0) / g, 2.0);
  }
  const double v = ClampSpeed(x.v + accel * obs.dt, x, kp, obs.dt);

  // Pure pursuit on the closest centerline, in its travel direction.
  const Lane* lane = nullptr;
  double best = std::numeric_limits<double>::infinity();
  for (const Lane* l : obs.map_view.lanes) {
    const double d = l->centerline.DistanceTo(pos);
    if (d < best) {
      best = d;
      lane = l;
    }
  }
  if (!lane) return {v, ClampSteering(0.0, kp)};
  const auto proj = lane->centerline.Project(pos);
  const double sign = std::cos(proj.heading - x.pose.theta) >= 0.0 ? 1.0 : -1.0;
  const double ld = std::max(p_.min_lookahead, p_.lookahead_time * x.v);
  const Vec2 goal = lane->centerline.ToCartesian(proj.s + sign * ld, 0.0);
  const Vec2 rel = goal - pos;
  const double alpha = NormalizeAngle(std::atan2(rel.y, rel.x) - x.pose.theta);
  const double delta = std::atan(2.0 * kp.wheelbase * std::sin(alpha) / std::max(rel.Norm(), 1e-6));
  return {v, ClampSteering(delta, kp)};
}

std::unique_ptr<Policy> MakePolicy(std::string_view name, const json& params) {
  const json p = params.is_null() ? json::object() : params;
  ObjectReader r(p, "/policy/params");
  std::unique_ptr<Policy> out;
  if (name == "expert_replay") {
    out = std::make_unique<ExpertReplayPolicy>();
  } else if (name == "constant_control") {
    ControlInput u;
    u.v = r.Number("v");
    u.delta = r.OptionalNumber("delta").value_or(0.0);
    out = std::make_unique<ConstantControlPolicy>(u);
  } else if (name == "lane_follow_idm") {
    IdmParams idm;
    idm.desired_speed = r.OptionalNumber("desired_speed").value_or(idm.desired_speed);
    idm.time_headway = r.OptionalNumber("time_headway").value_or(idm.time_headway);
    idm.min_gap = r.OptionalNumber("min_gap").value_or(idm.min_gap);
    idm.max_accel = r.OptionalNumber("max_accel").value_or(idm.max_accel);
    idm.comfortable_decel = r.OptionalNumber("comfortable_decel").value_or(idm.comfortable_decel);
    idm.lookahead_time = r.OptionalNumber("lookahead_time").value_or(idm.lookahead_time);
    idm.min_lookahead = r.OptionalNumber("min_lookahead").value_or(idm.min_lookahead);
    if (!(idm.max_accel > 0.0) || !(idm.comfortable_decel > 0.0) || !(idm.min_lookahead > 0.0)) {
      throw InvalidArgument("lane_follow_idm: max_accel, comfortable_decel and min_lookahead must be positive");
    }
    out = std::make_unique<LaneFollowIdmPolicy>(idm);
  } else {
    throw InvalidArgument("unknown policy '" + std::string(name) + "'");
  }
  r.RejectUnknown();
  return out;
}

}  // namespace bevsim
