#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bevsim/daa.h"
#include "bevsim/kinematics.h"
#include "bevsim/scenario.h"
#include "json.hpp"

namespace bevsim {

inline constexpr double kObservationRadius = 60.0;

struct DeviationThresholds {
  double position = 2.0;  // m
  double heading = 0.52;  // rad

  void Validate() const;

  friend bool operator==(const DeviationThresholds&, const DeviationThresholds&) = default;
};

struct ObservedAgent {
  std::string id;
  AgentCategory category = AgentCategory::kCar;
  Pose2 pose;
  double v = 0.0;
  OrientedBox footprint;
};

struct MapView {
  std::vector<const Lane*> lanes;  // centerline within the radius, by id
  std::vector<const Polygon*> drivable;
};

struct Observation {
  double t = 0.0;
  std::size_t step = 0;
  double dt = kDefaultDt;
  AgentState ego;
  KinematicParams ego_params;
  double ego_half_length = 0.0;
  double ego_half_width = 0.0;
  std::vector<ObservedAgent> others;  // within the radius, sorted by id
  MapView map_view;
  // Expert reference on the scenario grid; route->samples[step] is time-aligned.
  const Trajectory* route = nullptr;
};

// Must be pure: same (observation, seed) gives the same control.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string Name() const = 0;
  virtual ControlInput Act(const Observation& obs, std::uint64_t seed) const = 0;
};

// Fits the control that reaches the next expert sample, with a cross-track
// correction, clamped into the envelope. Reproduces bicycle-model experts
// exactly.
class ExpertReplayPolicy : public Policy {
 public:
  std::string Name() const override { return "expert_replay"; }
  ControlInput Act(const Observation& obs, std::uint64_t seed) const override;
};

class ConstantControlPolicy : public Policy {
 public:
  explicit ConstantControlPolicy(ControlInput u) : u_(u) {}
  std::string Name() const override { return "constant_control"; }
  ControlInput Act(const Observation& obs, std::uint64_t seed) const override;

 private:
  ControlInput u_;
};

struct IdmParams {
  double desired_speed = 10.0;     // m/s
  double time_headway = 1.5;       // s
  double min_gap = 2.0;            // m
  double max_accel = 1.5;          // m/s^2
  double comfortable_decel = 2.0;  // m/s^2
  double lookahead_time = 1.0;     // s, pure-pursuit lookahead per m/s
  double min_lookahead = 4.0;      // m
};

// Intelligent-driver-model speed law behind the nearest leader, pure
// pursuit on the nearest lane centerline.
class LaneFollowIdmPolicy : public Policy {
 public:
  explicit LaneFollowIdmPolicy(IdmParams params = {}) : p_(params) {}
  std::string Name() const override { return "lane_follow_idm"; }
  ControlInput Act(const Observation& obs, std::uint64_t seed) const override;

 private:
  IdmParams p_;
};

// name: expert_replay | constant_control | lane_follow_idm. Throws
// InvalidArgument / SchemaError on unknown names or fields.
std::unique_ptr<Policy> MakePolicy(std::string_view name, const nlohmann::json& params);

enum class EventKind { kDynamicCollision, kStaticCollision, kPositionDeviation, kHeadingDeviation };

std::string_view ToString(EventKind kind);
std::optional<EventKind> ParseEventKind(std::string_view name);

struct Event {
  double t = 0.0;
  EventKind kind = EventKind::kDynamicCollision;
  std::vector<std::string> agents;  // collision partners, sorted
  std::string detail;

  friend bool operator==(const Event&, const Event&) = default;
};

enum class Termination { kHorizon, kCollision, kEnvelopeViolation, kPolicyError, kError };

std::string_view ToString(Termination t);

struct AdversaryAssignment {
  std::string target;
  Trajectory trajectory;  // on the scenario grid
};

struct ClipResult {
  std::string scenario_id;
  std::uint64_t seed = 0;
  std::vector<AgentState> states;
  std::vector<Event> events;
  bool completed = false;
  Termination termination = Termination::kHorizon;
  std::string termination_detail;
  bool edited = false;
  // Set when the clip could not be run at all (bad input, not a driving
  // outcome); such clips are excluded from the metric denominators.
  std::optional<std::string> error;
  // Adversary summary (kind, target, perturbation) when one was injected.
  std::optional<nlohmann::json> adversary;

  bool HasEvent(EventKind kind) const;

  friend bool operator==(const ClipResult&, const ClipResult&) = default;
};

// Closed-loop rollout over the scenario grid. Events are detected at t = 0
// and after every step; the first collision ends the clip. Deviation from
// the time-aligned expert pose is logged (not terminal) at each instant
// where it exceeds the thresholds. Policy exceptions and envelope
// violations also end the clip; completed is set only when the clip
// reaches the horizon.
ClipResult RunClip(const Scenario& s, const Policy& policy,
                   const std::optional<AdversaryAssignment>& adversary,
                   const DeviationThresholds& thresholds, std::uint64_t seed);

enum class DaaMode { kRl, kImitation };

struct DaaConfig {
  std::vector<BehaviorSpec> catalog;  // tried in order; the first injection wins
  double p_perturb = 0.5;
  SpeedScaleBounds bounds;
  DaaMode mode = DaaMode::kRl;
  std::uint64_t seed = 0;  // mixed into every clip seed
};

struct BatchOptions {
  std::optional<DaaConfig> daa;
  DeviationThresholds thresholds;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
};

// splitmix64(batch_seed ^ fnv1a64(scenario_id)).
std::uint64_t ClipSeed(std::uint64_t batch_seed, std::string_view scenario_id);

// Runs the adversary pipeline (if configured) for one scenario: returns the
// scenario to roll out (ego expert replaced in imitation mode) and the
// adversary assignment, or nullopt assignment when nothing was injected.
struct PreparedClip {
  Scenario scenario;
  std::optional<AdversaryAssignment> adversary;
  std::optional<nlohmann::json> summary;
};
PreparedClip PrepareClip(const Scenario& s, const DaaConfig* daa, std::uint64_t clip_seed);

// One ClipResult per scenario, in input order, independent of the worker
// count. Per-scenario failures are recorded in ClipResult::error.
std::vector<ClipResult> RunBatch(std::span<const Scenario> scenarios, const Policy& policy,
                                 const BatchOptions& options);

nlohmann::json ClipToJson(const ClipResult& clip);
ClipResult ClipFromJson(const nlohmann::json& j);
// One canonical JSON document per line.
std::string SerializeClips(std::span<const ClipResult> clips);
std::vector<ClipResult> ParseClips(std::string_view jsonl);

}  // namespace bevsim
