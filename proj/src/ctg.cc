#include "bevsim/ctg.h"

#include <cmath>

#include "bevsim/canonical_json.h"

namespace bevsim {

using nlohmann::json;

namespace {

constexpr double kMinSegment = 1e-3;

std::size_t FirstIndexAtOrAfter(const std::vector<double>& grid, double t) {
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (grid[k] >= t - kTimeTolerance) return k;
  }
  return grid.size();
}

// Direction of the segment leaving sample k, or its stored heading when the
// segment is too short to define one.
double TravelHeading(const Trajectory& traj, std::size_t k) {
  if (k + 1 < traj.size()) {
    const Vec2 d = traj.samples[k + 1].pose.position() - traj.samples[k].pose.position();
    if (d.Norm() >= kMinSegment) return std::atan2(d.y, d.x);
  }
  return traj.samples[k].pose.theta;
}

// Recomputes headings and speeds of `out` where its positions differ from
// `expert`; samples whose adjacent segments are untouched keep their values.
void Refresh(Trajectory& out, const Trajectory& expert) {
  Trajectory fresh = out;
  RecomputeHeadings(fresh, expert.front().pose.theta);
  const std::size_t n = out.size();
  auto same = [&](std::size_t k) {
    return out.samples[k].pose.x == expert.samples[k].pose.x &&
           out.samples[k].pose.y == expert.samples[k].pose.y;
  };
  for (std::size_t k = 0; k < n; ++k) {
    const bool outgoing_same = same(k) && (k + 1 == n || same(k + 1));
    const bool incoming_same = same(k) && (k == 0 || same(k - 1));
    out.samples[k].pose.theta = outgoing_same ? expert.samples[k].pose.theta
                                              : fresh.samples[k].pose.theta;
    if (!incoming_same) {
      out.samples[k].v = Distance(out.samples[k].pose.position(), out.samples[k - 1].pose.position()) /
                         (out.samples[k].t - out.samples[k - 1].t);
    }
  }
}

std::string Slug(const ExtensionSpec& spec) {
  switch (spec.kind) {
    case ExtensionKind::kLaneChangeLeft:
      return "lane-change-left";
    case ExtensionKind::kLaneChangeRight:
      return "lane-change-right";
    case ExtensionKind::kLaneShift:
      return "lane-shift-" + FormatCanonicalFloat(spec.offset);
    case ExtensionKind::kSharpTurn:
      return std::string(spec.radius > 0.0 ? "sharp-turn-left-r" : "sharp-turn-right-r") +
             FormatCanonicalFloat(std::abs(spec.radius));
  }
  return "extension";
}

}  // namespace

void InterpolationConfig::Validate() const {
  if (m < 1) throw InvalidArgument("interpolation m must be >= 1, got " + std::to_string(m));
}

Trajectory Interpolate(const Trajectory& traj, const InterpolationConfig& cfg) {
  cfg.Validate();
  Trajectory out;
  if (traj.empty()) return out;
  out.samples.reserve((traj.size() - 1) * (cfg.m + 1) + 1);
  for (std::size_t i = 0; i + 1 < traj.size(); ++i) {
    const TrajectorySample& a = traj.samples[i];
    const TrajectorySample& b = traj.samples[i + 1];
    out.samples.push_back(a);
    const double span = b.t - a.t;
    const double step = span / (cfg.m + 1);
    const double turn = NormalizeAngle(b.pose.theta - a.pose.theta);
    for (int k = 1; k <= cfg.m; ++k) {
      const double t = a.t + k * step;
      const double alpha = (t - a.t) / span;
      TrajectorySample smp;
      smp.t = t;
      smp.pose.x = a.pose.x + alpha * (b.pose.x - a.pose.x);
      smp.pose.y = a.pose.y + alpha * (b.pose.y - a.pose.y);
      smp.pose.theta = NormalizeAngle(a.pose.theta + alpha * turn);
      smp.v = a.v + alpha * (b.v - a.v);
      out.samples.push_back(smp);
    }
  }
  out.samples.push_back(traj.back());
  return out;
}

Scenario AdjustNeighbors(const Scenario& s, const InterpolationConfig& cfg) {
  cfg.Validate();
  Scenario out = s;
  out.ego.trajectory = Interpolate(s.ego.trajectory, cfg);
  for (Agent& a : out.others) {
    if (a.trajectory.size() >= 2) a.trajectory = Interpolate(a.trajectory, cfg);
  }
  out.dt = s.dt / (cfg.m + 1);
  out.id = s.id + "-interp-m" + std::to_string(cfg.m);
  out.provenance = Provenance{s.id, "interpolate", json{{"m", cfg.m}}};
  return out;
}

std::string_view ToString(ExtensionKind kind) {
  switch (kind) {
    case ExtensionKind::kLaneChangeLeft:
      return "LaneChangeLeft";
    case ExtensionKind::kLaneChangeRight:
      return "LaneChangeRight";
    case ExtensionKind::kLaneShift:
      return "LaneShift";
    case ExtensionKind::kSharpTurn:
      return "SharpTurn";
  }
  return "?";
}

std::optional<ExtensionKind> ParseExtensionKind(std::string_view name) {
  for (ExtensionKind k : {ExtensionKind::kLaneChangeLeft, ExtensionKind::kLaneChangeRight,
                          ExtensionKind::kLaneShift, ExtensionKind::kSharpTurn}) {
    if (ToString(k) == name) return k;
  }
  return std::nullopt;
}

void ExtensionSpec::Validate(double horizon) const {
  if (!(t_start >= 0.0) || !(t_end > t_start) || t_end > horizon + kTimeTolerance) {
    throw InvalidArgument("extension window [" + FormatCanonicalFloat(t_start) + ", " +
                          FormatCanonicalFloat(t_end) + "] must satisfy 0 <= start < end <= " +
                          FormatCanonicalFloat(horizon));
  }
  if (kind == ExtensionKind::kLaneShift && !std::isfinite(offset)) {
    throw InvalidArgument("lane shift offset must be finite");
  }
  if (kind == ExtensionKind::kSharpTurn && (!std::isfinite(radius) || radius == 0.0)) {
    throw InvalidArgument("sharp turn radius must be finite and non-zero");
  }
}

std::string ExtensionSpec::Label() const {
  std::string label(ToString(kind));
  if (kind == ExtensionKind::kLaneShift) label += "(" + FormatCanonicalFloat(offset) + ")";
  if (kind == ExtensionKind::kSharpTurn) label += "(" + FormatCanonicalFloat(radius) + ")";
  return label + "[" + FormatCanonicalFloat(t_start) + "," + FormatCanonicalFloat(t_end) + "]";
}

json ExtensionSpec::ToJson() const {
  json j{{"kind", std::string(ToString(kind))}, {"t_start", t_start}, {"t_end", t_end}};
  if (kind == ExtensionKind::kLaneShift) j["offset"] = offset;
  if (kind == ExtensionKind::kSharpTurn) j["radius"] = radius;
  return j;
}

Trajectory Extend(const Scenario& s, const ExtensionSpec& spec, double d_min) {
  spec.Validate(s.horizon);
  const std::vector<double> grid = ScenarioGrid(s);
  const Trajectory expert = Resample(s.ego.trajectory, s.dt, s.horizon);
  const std::size_t n = grid.size();
  const std::size_t ks = FirstIndexAtOrAfter(grid, spec.t_start);
  Trajectory out = expert;
  if (ks >= n) return out;

  if (spec.kind == ExtensionKind::kSharpTurn) {
    const Vec2 p0 = expert.samples[ks].pose.position();
    const double th0 = TravelHeading(expert, ks);
    const double r = spec.radius;
    double arc = 0.0;
    std::size_t ke = ks;
    for (std::size_t k = ks + 1; k < n && grid[k] <= spec.t_end + kTimeTolerance; ++k) {
      arc += Distance(expert.samples[k].pose.position(), expert.samples[k - 1].pose.position());
      const double th = th0 + arc / r;
      out.samples[k].pose.x = p0.x + r * (std::sin(th) - std::sin(th0));
      out.samples[k].pose.y = p0.y + r * (std::cos(th0) - std::cos(th));
      ke = k;
    }
    const double turn = NormalizeAngle(th0 + arc / r - TravelHeading(expert, ke));
    const Vec2 anchor_old = expert.samples[ke].pose.position();
    const Vec2 anchor_new = out.samples[ke].pose.position();
    for (std::size_t k = ke + 1; k < n; ++k) {
      const Vec2 p = anchor_new + Rotate(expert.samples[k].pose.position() - anchor_old, turn);
      out.samples[k].pose.x = p.x;
      out.samples[k].pose.y = p.y;
    }
  } else {
    const Vec2 p_start = expert.samples[ks].pose.position();
    const auto here = LaneAt(s.map, p_start);
    if (!here) throw ExtensionFailed(spec.Label() + ": ego is not on a lane at the window start");
    const LaneFrame frame{here->lane};
    double delta = spec.offset;
    if (spec.kind != ExtensionKind::kLaneShift) {
      const bool left = spec.kind == ExtensionKind::kLaneChangeLeft;
      const auto& neighbor_id = left ? here->lane->left_neighbor : here->lane->right_neighbor;
      if (!neighbor_id) {
        throw ExtensionFailed(spec.Label() + ": lane '" + here->lane->id + "' has no " +
                              (left ? "left" : "right") + " neighbor");
      }
      const Lane* neighbor = s.map.FindLane(*neighbor_id);
      const Vec2 center = neighbor->centerline.ToCartesian(neighbor->centerline.Project(p_start).s, 0.0);
      delta = frame.Project(center).lateral - here->projection.lateral;
    }
    if (delta == 0.0) return out;
    const double duration = spec.t_end - spec.t_start;
    for (std::size_t k = ks; k < n; ++k) {
      const double e = QuinticEase((grid[k] - spec.t_start) / duration);
      if (e == 0.0) continue;
      const auto proj = frame.Project(expert.samples[k].pose.position());
      const Vec2 p = frame.ToCartesian(proj.s, proj.lateral + e * delta);
      out.samples[k].pose.x = p.x;
      out.samples[k].pose.y = p.y;
    }
  }
  Refresh(out, expert);

  FeasibilityReport report = CheckFeasibility(s, out, s.ego.id, std::nullopt, d_min);
  if (!report.feasible()) {
    throw ExtensionFailed(spec.Label() + ": " + report.Summary(), std::move(report));
  }
  return out;
}

Scenario ApplyExtension(const Scenario& s, const ExtensionSpec& spec, double d_min) {
  Scenario out = s;
  out.ego.trajectory = Extend(s, spec, d_min);
  out.id = s.id + "-" + Slug(spec);
  out.provenance = Provenance{s.id, "extend", spec.ToJson()};
  return out;
}

std::vector<ExtensionSpec> DefaultExtensionSet(double horizon) {
  const double t_start = std::min(1.0, 0.25 * horizon);
  const double t_end = std::min(4.0, horizon);
  std::vector<ExtensionSpec> out;
  for (ExtensionKind kind : {ExtensionKind::kLaneChangeLeft, ExtensionKind::kLaneChangeRight}) {
    ExtensionSpec spec;
    spec.kind = kind;
    spec.t_start = t_start;
    spec.t_end = t_end;
    out.push_back(spec);
  }
  for (double radius : {12.0, -12.0}) {
    ExtensionSpec spec;
    spec.kind = ExtensionKind::kSharpTurn;
    spec.t_start = t_start;
    spec.t_end = t_end;
    spec.radius = radius;
    out.push_back(spec);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Action statistics

std::string_view ToString(ActionClass action) {
  switch (action) {
    case ActionClass::kStraight:
      return "Straight";
    case ActionClass::kLeftTurn:
      return "LeftTurn";
    case ActionClass::kRightTurn:
      return "RightTurn";
    case ActionClass::kLaneChange:
      return "LaneChange";
    case ActionClass::kUTurn:
      return "UTurn";
  }
  return "?";
}

ActionClass ClassifyAction(const Trajectory& traj, const MapModel& map,
                           const ActionThresholds& thresholds) {
  if (traj.size() < 2) return ActionClass::kStraight;
  double net = 0.0;
  for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
    net += NormalizeAngle(traj.samples[k + 1].pose.theta - traj.samples[k].pose.theta);
  }
  if (std::abs(net) > thresholds.u_turn) return ActionClass::kUTurn;
  if (std::abs(net) >= thresholds.turn) return net > 0.0 ? ActionClass::kLeftTurn : ActionClass::kRightTurn;

  const auto start = NearestLane(map, traj.front().pose.position());
  if (!start) return ActionClass::kStraight;
  const auto end = NearestLane(map, traj.back().pose.position());
  if (end && end->lane != start->lane) return ActionClass::kLaneChange;
  const double limit = thresholds.lane_offset_fraction * start->lane->width;
  for (const TrajectorySample& smp : traj.samples) {
    if (std::abs(start->lane->centerline.Project(smp.pose.position()).lateral) >= limit) {
      return ActionClass::kLaneChange;
    }
  }
  return ActionClass::kStraight;
}

void ActionHistogram::Add(ActionClass action) {
  ++counts[static_cast<std::size_t>(action)];
  ++total;
}

json ActionHistogram::ToJson() const {
  json j;
  for (ActionClass a : kAllActionClasses) j[std::string(ToString(a))] = Count(a);
  j["total"] = total;
  return j;
}

ActionHistogram DatasetStats(std::span<const Scenario> scenarios,
                             const ActionThresholds& thresholds) {
  ActionHistogram h;
  for (const Scenario& s : scenarios) h.Add(ClassifyAction(s.ego.trajectory, s.map, thresholds));
  return h;
}

// ---------------------------------------------------------------------------
// Collision-free ego for edited scenarios

std::optional<AvoidancePlan> PlanAvoidingEgo(const Scenario& s, double d_min) {
  const Trajectory expert = Resample(s.ego.trajectory, s.dt, s.horizon);
  if (CheckFeasibility(s, expert, s.ego.id, std::nullopt, d_min).feasible()) {
    return AvoidancePlan{"expert", expert};
  }
  for (double t0 : {0.0, 0.5, 1.0, 1.5}) {
    for (ExtensionKind kind : {ExtensionKind::kLaneChangeLeft, ExtensionKind::kLaneChangeRight}) {
      ExtensionSpec spec;
      spec.kind = kind;
      spec.t_start = t0;
      spec.t_end = std::min(t0 + 3.0, s.horizon);
      if (spec.t_end <= spec.t_start) continue;
      try {
        return AvoidancePlan{spec.Label(), Extend(s, spec, d_min)};
      } catch (const ExtensionFailed&) {
      }
    }
  }
  const std::vector<double> grid = ScenarioGrid(s);
  const double decel = s.ego.kinematics->a_max;
  for (double t = std::floor(s.horizon / 0.5) * 0.5; t >= 0.0; t -= 0.5) {
    Trajectory brake = BrakeAlongPath(expert, grid, t, decel, 0.0);
    if (CheckFeasibility(s, brake, s.ego.id, std::nullopt, d_min).feasible()) {
      return AvoidancePlan{"yield@" + FormatCanonicalFloat(t), std::move(brake)};
    }
  }
  return std::nullopt;
}

}  // namespace bevsim
