#include "bevsim/scenario.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace bevsim {

std::string_view ToString(LaneDirection direction) {
  return direction == LaneDirection::kForward ? "FORWARD" : "OPPOSITE";
}

const Lane* MapModel::FindLane(std::string_view id) const {
  for (const Lane& lane : lanes) {
    if (lane.id == id) return &lane;
  }
  return nullptr;
}

bool MapModel::IsDrivable(const Vec2& p) const {
  return std::any_of(drivable.begin(), drivable.end(),
                     [&](const Polygon& poly) { return PointInPolygon(p, poly); });
}

std::optional<LanePosition> LaneAt(const MapModel& map, const Vec2& p) {
  std::optional<LanePosition> best;
  for (const Lane& lane : map.lanes) {
    const Polyline::Projection proj = lane.centerline.Project(p);
    if (proj.s < 0.0 || proj.s > lane.centerline.Length()) continue;
    if (std::abs(proj.lateral) > lane.half_width()) continue;
    if (!best || std::abs(proj.lateral) < std::abs(best->projection.lateral)) {
      best = LanePosition{&lane, proj};
    }
  }
  return best;
}

std::optional<LanePosition> NearestLane(const MapModel& map, const Vec2& p) {
  std::optional<LanePosition> best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (const Lane& lane : map.lanes) {
    const double d = lane.centerline.DistanceTo(p);
    if (d < best_dist) {
      best_dist = d;
      best = LanePosition{&lane, lane.centerline.Project(p)};
    }
  }
  return best;
}

const Agent* Scenario::FindAgent(std::string_view agent_id) const {
  if (ego.id == agent_id) return &ego;
  for (const Agent& a : others) {
    if (a.id == agent_id) return &a;
  }
  return nullptr;
}

// ---------------------------------------------------------------------------
// Trajectories

TrajectorySample Trajectory::At(double t) const {
  if (samples.empty()) throw InvalidArgument("empty trajectory");
  if (t <= samples.front().t) return {t, samples.front().pose, samples.front().v};
  if (t >= samples.back().t) return {t, samples.back().pose, samples.back().v};
  const auto it = std::upper_bound(samples.begin(), samples.end(), t,
                                   [](double q, const TrajectorySample& s) { return q < s.t; });
  const TrajectorySample& b = *it;
  const TrajectorySample& a = *(it - 1);
  const double alpha = (t - a.t) / (b.t - a.t);
  TrajectorySample out;
  out.t = t;
  out.pose.x = a.pose.x + alpha * (b.pose.x - a.pose.x);
  out.pose.y = a.pose.y + alpha * (b.pose.y - a.pose.y);
  out.pose.theta = NormalizeAngle(a.pose.theta + alpha * NormalizeAngle(b.pose.theta - a.pose.theta));
  out.v = a.v + alpha * (b.v - a.v);
  return out;
}

TimedPath Trajectory::Path() const {
  TimedPath path;
  path.reserve(samples.size());
  for (const TrajectorySample& s : samples) path.push_back({s.t, s.pose.position()});
  return path;
}

std::vector<double> GridTimes(double dt, double horizon) {
  if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
  if (!(horizon >= 0.0)) throw InvalidArgument("horizon must be non-negative");
  const auto steps = static_cast<std::size_t>(std::floor(horizon / dt + 1e-9));
  std::vector<double> times(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) {
    times[k] = std::min(static_cast<double>(k) * dt, horizon);
  }
  return times;
}

std::vector<double> ScenarioGrid(const Scenario& s) { return GridTimes(s.dt, s.horizon); }

Trajectory Resample(const Trajectory& traj, double dt, double horizon) {
  if (traj.empty()) throw InvalidArgument("cannot resample an empty trajectory");
  Trajectory out;
  const std::vector<double> grid = GridTimes(dt, horizon);
  out.samples.reserve(grid.size());
  std::size_t j = 0;
  for (double t : grid) {
    while (j < traj.samples.size() && traj.samples[j].t < t - kTimeTolerance) ++j;
    if (j < traj.samples.size() && std::abs(traj.samples[j].t - t) <= kTimeTolerance &&
        traj.samples[j].t >= 0.0 && traj.samples[j].t <= horizon) {
      out.samples.push_back(traj.samples[j]);
    } else {
      out.samples.push_back(traj.At(t));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Validation

namespace {

void Require(bool ok, const std::string& pointer, const std::string& message) {
  if (!ok) throw ValidationError(pointer, message);
}

bool Finite(const Pose2& p) {
  return std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.theta);
}

void ValidateAgent(const Agent& a, const std::string& ptr, bool is_ego) {
  Require(!a.id.empty(), ptr + "/id", "agent id must be non-empty");
  Require(a.half_length > 0.0 && std::isfinite(a.half_length), ptr + "/half_length",
          "must be positive");
  Require(a.half_width > 0.0 && std::isfinite(a.half_width), ptr + "/half_width",
          "must be positive");
  if (is_ego) Require(IsVehicle(a.category), ptr + "/category", "ego must be a vehicle");
  if (IsVehicle(a.category)) {
    Require(a.kinematics.has_value(), ptr + "/kinematics", "vehicles need kinematic parameters");
    try {
      a.kinematics->Validate();
    } catch (const InvalidArgument& e) {
      throw ValidationError(ptr + "/kinematics", e.what());
    }
  } else {
    Require(!a.kinematics.has_value(), ptr + "/kinematics",
            std::string(ToString(a.category)) + " agents carry no kinematic parameters");
  }

  const auto& samples = a.trajectory.samples;
  if (a.is_static()) {
    Require(samples.size() == 1, ptr + "/trajectory",
            "static obstacles have exactly one trajectory sample");
  } else {
    Require(samples.size() >= 2, ptr + "/trajectory", "trajectory needs at least two samples");
  }
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const std::string sp = ptr + "/trajectory/" + std::to_string(i);
    Require(std::isfinite(samples[i].t) && Finite(samples[i].pose) && std::isfinite(samples[i].v),
            sp, "non-finite value");
    Require(samples[i].pose.theta > -kPi && samples[i].pose.theta <= kPi, sp + "/theta",
            "heading must lie in (-pi, pi]");
    if (i > 0) {
      Require(samples[i].t > samples[i - 1].t, sp + "/t",
              "timestamps must strictly increase (agent '" + a.id + "', index " +
                  std::to_string(i) + ")");
    }
  }
}

}  // namespace

void ValidateScenario(const Scenario& s) {
  Require(!s.id.empty(), "/id", "scenario id must be non-empty");
  Require(s.dt > 0.0 && std::isfinite(s.dt), "/dt", "must be positive");
  Require(s.horizon > 0.0 && std::isfinite(s.horizon), "/horizon", "must be positive");
  Require(s.horizon >= s.dt - kTimeTolerance, "/horizon", "must cover at least one step");
  Require(!s.map.drivable.empty(), "/map/drivable", "at least one drivable polygon required");

  std::set<std::string> lane_ids;
  for (std::size_t i = 0; i < s.map.lanes.size(); ++i) {
    const Lane& lane = s.map.lanes[i];
    const std::string ptr = "/map/lanes/" + std::to_string(i);
    Require(!lane.id.empty(), ptr + "/id", "lane id must be non-empty");
    Require(lane_ids.insert(lane.id).second, ptr + "/id", "duplicate lane id '" + lane.id + "'");
    Require(lane.width > 0.0 && std::isfinite(lane.width), ptr + "/width", "must be positive");
    Require(lane.centerline.points().size() >= 2, ptr + "/centerline",
            "centerline needs at least two points");
  }
  for (std::size_t i = 0; i < s.map.lanes.size(); ++i) {
    const Lane& lane = s.map.lanes[i];
    const std::string ptr = "/map/lanes/" + std::to_string(i);
    if (lane.left_neighbor) {
      Require(lane_ids.count(*lane.left_neighbor) == 1, ptr + "/left_neighbor",
              "unknown lane '" + *lane.left_neighbor + "'");
    }
    if (lane.right_neighbor) {
      Require(lane_ids.count(*lane.right_neighbor) == 1, ptr + "/right_neighbor",
              "unknown lane '" + *lane.right_neighbor + "'");
    }
  }

  std::set<std::string> agent_ids;
  ValidateAgent(s.ego, "/ego", true);
  agent_ids.insert(s.ego.id);
  for (std::size_t i = 0; i < s.others.size(); ++i) {
    const std::string ptr = "/others/" + std::to_string(i);
    ValidateAgent(s.others[i], ptr, false);
    Require(agent_ids.insert(s.others[i].id).second, ptr + "/id",
            "duplicate agent id '" + s.others[i].id + "'");
  }
}

// ---------------------------------------------------------------------------
// Files

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteFile(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path + "'");
  out << contents;
  if (!out) throw Error("write failed for '" + path + "'");
}

}  // namespace bevsim
