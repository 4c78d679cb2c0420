#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bevsim/errors.h"
#include "bevsim/geometry.h"
#include "bevsim/kinematics.h"
#include "json.hpp"

namespace bevsim {

inline constexpr std::string_view kSchemaVersion = "1";

enum class LaneDirection { kForward, kOpposite };

std::string_view ToString(LaneDirection direction);

struct Lane {
  std::string id;
  Polyline centerline;
  double width = 3.5;
  std::optional<std::string> left_neighbor;
  std::optional<std::string> right_neighbor;
  // Relative to the ego vehicle's initial travel direction.
  LaneDirection direction = LaneDirection::kForward;

  double half_width() const { return 0.5 * width; }

  friend bool operator==(const Lane&, const Lane&) = default;
};

struct MapModel {
  std::vector<Polygon> drivable;
  std::vector<Lane> lanes;

  const Lane* FindLane(std::string_view id) const;
  bool IsDrivable(const Vec2& p) const;

  friend bool operator==(const MapModel&, const MapModel&) = default;
};

struct LanePosition {
  const Lane* lane = nullptr;
  Polyline::Projection projection;
};

// Lane whose centerline is closest to `p` among those with |lateral| within
// half the lane width and the foot point inside the centerline's extent.
std::optional<LanePosition> LaneAt(const MapModel& map, const Vec2& p);
// Closest centerline regardless of width; nullopt only for lane-free maps.
std::optional<LanePosition> NearestLane(const MapModel& map, const Vec2& p);

struct TrajectorySample {
  double t = 0.0;
  Pose2 pose;
  double v = 0.0;

  friend bool operator==(const TrajectorySample&, const TrajectorySample&) = default;
};

struct Trajectory {
  std::vector<TrajectorySample> samples;

  bool empty() const { return samples.empty(); }
  std::size_t size() const { return samples.size(); }
  const TrajectorySample& front() const { return samples.front(); }
  const TrajectorySample& back() const { return samples.back(); }
  double Duration() const { return samples.empty() ? 0.0 : samples.back().t - samples.front().t; }

  // Linear position / shortest-arc heading interpolation; the boundary
  // sample is held outside the covered time range.
  TrajectorySample At(double t) const;
  TimedPath Path() const;

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

struct Agent {
  std::string id;
  AgentCategory category = AgentCategory::kCar;
  double half_length = 2.4;
  double half_width = 0.95;
  std::optional<KinematicParams> kinematics;
  Trajectory trajectory;

  bool is_static() const { return category == AgentCategory::kStaticObstacle; }
  OrientedBox FootprintAt(const Pose2& pose) const { return {pose, half_length, half_width}; }

  friend bool operator==(const Agent&, const Agent&) = default;
};

// Traceability block for derived scenarios.
struct Provenance {
  std::string source_id;
  std::string transform;  // "interpolate" | "extend" | "adversary"
  nlohmann::json params = nlohmann::json::object();

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct Scenario {
  std::string id;
  MapModel map;
  Agent ego;  // trajectory = expert reference
  std::vector<Agent> others;
  double horizon = 0.0;
  double dt = kDefaultDt;
  std::optional<Provenance> provenance;

  const Agent* FindAgent(std::string_view agent_id) const;
  bool IsEdited() const { return provenance && provenance->transform == "adversary"; }

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

// Grid instants k * dt for k = 0 .. floor(horizon / dt), clamped to horizon.
std::vector<double> GridTimes(double dt, double horizon);
std::vector<double> ScenarioGrid(const Scenario& s);

// Samples at GridTimes(dt, horizon). Samples that already sit on a grid
// instant (within kTimeTolerance) are copied verbatim.
Trajectory Resample(const Trajectory& traj, double dt, double horizon);

// Invariant violation located by a JSON pointer into the scenario document.
class ValidationError : public Error {
 public:
  ValidationError(std::string pointer, const std::string& message)
      : Error(pointer + ": " + message), pointer_(std::move(pointer)) {}
  const std::string& pointer() const { return pointer_; }

 private:
  std::string pointer_;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class SchemaError : public Error {
 public:
  SchemaError(std::string pointer, const std::string& message)
      : Error(pointer + ": " + message), pointer_(std::move(pointer)) {}
  const std::string& pointer() const { return pointer_; }

 private:
  std::string pointer_;
};

// Throws ValidationError on the first broken invariant.
void ValidateScenario(const Scenario& s);

Scenario ScenarioFromJson(const nlohmann::json& doc);
nlohmann::json ScenarioToJson(const Scenario& s);

Scenario ParseScenario(std::string_view text);
std::string SerializeScenario(const Scenario& s);

Scenario LoadScenario(const std::string& path);
void SaveScenario(const Scenario& s, const std::string& path);

std::string ReadFile(const std::string& path);
void WriteFile(const std::string& path, const std::string& contents);

}  // namespace bevsim
