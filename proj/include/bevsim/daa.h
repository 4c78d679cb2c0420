#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bevsim/errors.h"
#include "bevsim/scenario.h"
#include "json.hpp"

namespace bevsim {

// Corner-case behaviors the adversary can be retargeted onto.
enum class BehaviorKind {
  kDynamicCutIn,
  kHardBrake,
  kOppositeLaneIntrusion,
  kParkingCutIn,
  kBlockedIntersection,
  kHazardAtSideLane,
  kWrongWayVehicle,
  kLaneChangeConflict,
};

inline constexpr BehaviorKind kAllBehaviorKinds[] = {
    BehaviorKind::kDynamicCutIn,         BehaviorKind::kHardBrake,
    BehaviorKind::kOppositeLaneIntrusion, BehaviorKind::kParkingCutIn,
    BehaviorKind::kBlockedIntersection,  BehaviorKind::kHazardAtSideLane,
    BehaviorKind::kWrongWayVehicle,      BehaviorKind::kLaneChangeConflict,
};

std::string_view ToString(BehaviorKind kind);
std::optional<BehaviorKind> ParseBehaviorKind(std::string_view name);

enum class LaneRelation { kSame, kAdjacent, kOpposite };

std::string_view ToString(LaneRelation relation);

// Window on the ego-to-candidate situation at t = 0.
struct DistanceGate {
  double min_range = 0.0;  // m, center distance
  double max_range = 0.0;  // m
  LaneRelation lane_relation = LaneRelation::kSame;
  // Max |heading - expected heading|; expected is the ego heading, or its
  // reverse for OPPOSITE.
  double heading_alignment_max = 0.35;

  friend bool operator==(const DistanceGate&, const DistanceGate&) = default;
};

// Union of the per-kind template parameters. Only the fields listed by
// RequiredParams(kind) are read, validated and serialized for a kind.
struct BehaviorParams {
  double trigger_gap = 0.0;        // m, longitudinal gap that starts the maneuver
  double lateral_duration = 0.0;   // s, duration of the lateral ease
  double target_gap_after = 0.0;   // m, gap kept ahead of ego during a cut-in
  double decel = 0.0;              // m/s^2
  double final_v = 0.0;            // m/s
  double start_time = 0.0;         // s, onset of speed changes
  double intrusion_depth = 0.0;    // m, footprint penetration into the ego lane
  double accel = 0.0;              // m/s^2
  double cruise_v = 0.0;           // m/s
  double lateral_distance = 0.0;   // m of travel over which a lateral ease runs
  double slow_v = 0.0;             // m/s
  double lateral_offset = 0.0;     // m, partial-blocking shift

  friend bool operator==(const BehaviorParams&, const BehaviorParams&) = default;
};

std::vector<std::string_view> RequiredParams(BehaviorKind kind);

struct BehaviorSpec {
  BehaviorKind kind = BehaviorKind::kDynamicCutIn;
  BehaviorParams params;
  double d_min = 1.0;  // m, see CheckFeasibility
  DistanceGate gate;

  // Throws InvalidArgument.
  void Validate() const;

  friend bool operator==(const BehaviorSpec&, const BehaviorSpec&) = default;
};

// Shipped defaults, one entry per kind in kAllBehaviorKinds order.
std::vector<BehaviorSpec> DefaultBehaviorCatalog();
BehaviorSpec DefaultBehavior(BehaviorKind kind);

nlohmann::json BehaviorToJson(const BehaviorSpec& spec);
BehaviorSpec BehaviorFromJson(const nlohmann::json& j, const std::string& pointer);
std::string SerializeBehaviorCatalog(const std::vector<BehaviorSpec>& catalog);
std::vector<BehaviorSpec> ParseBehaviorCatalog(std::string_view text);
std::vector<BehaviorSpec> LoadBehaviorCatalog(const std::string& path);
const BehaviorSpec* FindBehavior(const std::vector<BehaviorSpec>& catalog, BehaviorKind kind);

enum class FeasibilityCheck { kDrivable, kClearance, kKinematic, kBehavior };

std::string_view ToString(FeasibilityCheck check);

struct Violation {
  FeasibilityCheck check = FeasibilityCheck::kDrivable;
  std::size_t step = 0;
  std::string detail;
};

struct FeasibilityReport {
  std::vector<Violation> violations;

  bool feasible() const { return violations.empty(); }
  bool Has(FeasibilityCheck check) const;
  std::string Summary() const;
  nlohmann::json ToJson() const;
};

class GridMismatch : public Error {
 public:
  using Error::Error;
};

class SynthesisFailed : public Error {
 public:
  using Error::Error;
};

// Nearest gated vehicle at t = 0; ties broken by lexicographic id. Except
// for LaneChangeConflict the candidate must also be ahead of ego along the
// ego lane. nullopt when the behavior is not applicable to this scenario.
std::optional<std::string> SelectTarget(const Scenario& s, const BehaviorSpec& behavior);

// Builds the behavior-conditioned trajectory for `target` on the scenario
// grid. The result has passed CheckFeasibility; any template that cannot
// be realized raises SynthesisFailed with the reason.
Trajectory SynthesizeAdversary(const Scenario& s, const std::string& target,
                               const BehaviorSpec& behavior);

// Runs every check and reports all violations:
//  DRIVABLE   each sample center inside a drivable polygon;
//  CLEARANCE  against every agent except ego and owner, the footprint gap
//             measured along the center-to-center line stays >= d_min
//             (which implies center distance >= d_min);
//  KINEMATIC  CheckTrajectoryKinematics with the owner's parameters;
//  BEHAVIOR   the kind's BEV predicate (skipped when behavior is nullopt).
// Throws GridMismatch when the candidate is not on the scenario grid.
FeasibilityReport CheckFeasibility(const Scenario& s, const Trajectory& candidate,
                                   const std::string& owner,
                                   const std::optional<BehaviorSpec>& behavior,
                                   double d_min = 1.0);
inline FeasibilityReport CheckFeasibility(const Scenario& s, const Trajectory& candidate,
                                          const std::string& owner,
                                          const BehaviorSpec& behavior) {
  return CheckFeasibility(s, candidate, owner, std::optional<BehaviorSpec>(behavior),
                          behavior.d_min);
}

struct SpeedScaleBounds {
  double lo = 0.8;
  double hi = 1.2;
};

// Seed-deterministic uniform draw from [bounds.lo, bounds.hi].
double DrawSpeedScale(std::uint64_t seed, const SpeedScaleBounds& bounds);

// Replays the same path with every speed multiplied by a seeded factor: the
// output at time t sits where the input was at time factor * t. Resampled
// on GridTimes(dt, horizon). When the replay would run out of path before
// the horizon, a given stop_decel caps the speed so the agent brakes to a
// stop at the path end (decelerating by at most stop_decel); without it the
// end of the path is held.
Trajectory Perturb(const Trajectory& traj, std::uint64_t seed, const SpeedScaleBounds& bounds,
                   double dt, double horizon, std::optional<double> stop_decel = std::nullopt);
Trajectory PerturbWithFactor(const Trajectory& traj, double factor, double dt, double horizon,
                             std::optional<double> stop_decel = std::nullopt);

// Share of the target's a_max the pipeline uses for that end-of-path stop.
inline constexpr double kStopDecelFraction = 0.9;

// Keeps the path of `on_grid` (a trajectory on `grid`) and replaces its
// speed from start_time on by a ramp towards final_v at `decel`.
Trajectory BrakeAlongPath(const Trajectory& on_grid, const std::vector<double>& grid,
                          double start_time, double decel, double final_v);

// Quintic smoothstep 10u^3 - 15u^4 + 6u^5 on u clamped to [0, 1].
double QuinticEase(double u);

// Frenet-style helpers shared with the trajectory augmentation code.
struct LaneFrame {
  const Lane* lane = nullptr;
  Vec2 ToCartesian(double s, double l) const { return lane->centerline.ToCartesian(s, l); }
  Polyline::Projection Project(const Vec2& p) const { return lane->centerline.Project(p); }
};

// Lane the ego occupies at t = 0 (nullopt if off-lane).
std::optional<LaneFrame> EgoLaneFrame(const Scenario& s);

// Recomputes headings from forward differences of positions. Samples whose
// outgoing segment is shorter than 1 mm keep the previous heading.
void RecomputeHeadings(Trajectory& traj, double initial_heading);

enum class AdversaryStatus { kInjected, kNoCandidate, kSynthesisFailed, kInfeasible };

std::string_view ToString(AdversaryStatus status);

struct AdversaryOptions {
  double p_perturb = 0.5;
  SpeedScaleBounds bounds;
  std::uint64_t seed = 0;
};

struct AdversaryOutcome {
  AdversaryStatus status = AdversaryStatus::kNoCandidate;
  std::string target;
  Trajectory trajectory;           // final (possibly perturbed) trajectory
  Trajectory unperturbed;          // synthesized trajectory
  bool perturbed = false;
  double speed_scale = 1.0;
  FeasibilityReport report;
  std::string reason;
};

// select -> synthesize -> (seeded perturbation with probability p_perturb)
// -> check.
AdversaryOutcome RunAdversaryPipeline(const Scenario& s, const BehaviorSpec& behavior,
                                      const AdversaryOptions& options);

// Copy of `s` where `target` follows `trajectory`, tagged with an
// "adversary" provenance block.
Scenario InjectAdversary(const Scenario& s, const std::string& target,
                         const Trajectory& trajectory, nlohmann::json params);

}  // namespace bevsim
