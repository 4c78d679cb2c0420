#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bevsim/daa.h"
#include "bevsim/errors.h"
#include "bevsim/scenario.h"
#include "json.hpp"

namespace bevsim {

struct InterpolationConfig {
  int m = 1;  // points inserted between consecutive samples

  void Validate() const;
};

// Inserts m points between every pair of consecutive samples, at
// t_i + k * (t_{i+1} - t_i) / (m + 1), k = 1..m. Positions and speeds are
// linear in t, headings follow the shortest arc. Original samples are kept
// bit for bit.
Trajectory Interpolate(const Trajectory& traj, const InterpolationConfig& cfg);

// Densifies the ego and every other agent with the same config so all
// share the refined grid; the scenario dt becomes dt / (m + 1). Static
// obstacles (one sample) are left alone.
Scenario AdjustNeighbors(const Scenario& s, const InterpolationConfig& cfg);

enum class ExtensionKind { kLaneChangeLeft, kLaneChangeRight, kLaneShift, kSharpTurn };

std::string_view ToString(ExtensionKind kind);
std::optional<ExtensionKind> ParseExtensionKind(std::string_view name);

struct ExtensionSpec {
  ExtensionKind kind = ExtensionKind::kLaneChangeLeft;
  double t_start = 1.0;
  double t_end = 4.0;
  // LaneShift: signed lateral offset, left positive.
  double offset = 0.0;
  // SharpTurn: signed radius, positive turns left.
  double radius = 12.0;

  // Throws InvalidArgument.
  void Validate(double horizon) const;
  std::string Label() const;
  nlohmann::json ToJson() const;
};

class ExtensionFailed : public Error {
 public:
  ExtensionFailed(const std::string& reason, std::optional<FeasibilityReport> report = std::nullopt)
      : Error(reason), report_(std::move(report)) {}
  const std::optional<FeasibilityReport>& report() const { return report_; }

 private:
  std::optional<FeasibilityReport> report_;
};

// New ego trajectory on the scenario grid: the expert before the window,
// the templated maneuver inside it (quintic lateral ease for lane changes
// and shifts, a constant-radius arc for sharp turns) and the expert
// carried along rigidly afterwards. The expert's distance traveled per
// step is kept. Throws ExtensionFailed unless the result passes
// CheckFeasibility with owner = ego and no behavior predicate.
Trajectory Extend(const Scenario& s, const ExtensionSpec& spec, double d_min = 1.0);

// Copy of `s` whose ego follows Extend(s, spec), with provenance.
Scenario ApplyExtension(const Scenario& s, const ExtensionSpec& spec, double d_min = 1.0);

// LaneChangeLeft, LaneChangeRight and sharp turns of radius 12 m to both
// sides, over [1, 4] s clipped to the horizon.
std::vector<ExtensionSpec> DefaultExtensionSet(double horizon);

enum class ActionClass { kStraight, kLeftTurn, kRightTurn, kLaneChange, kUTurn };

inline constexpr std::array<ActionClass, 5> kAllActionClasses = {
    ActionClass::kStraight, ActionClass::kLeftTurn, ActionClass::kRightTurn,
    ActionClass::kLaneChange, ActionClass::kUTurn};

std::string_view ToString(ActionClass action);

struct ActionThresholds {
  double turn = kPi / 4.0;          // rad of net heading change
  double u_turn = 3.0 * kPi / 4.0;  // rad
  double lane_offset_fraction = 0.5;
};

// In order: UTurn if |net heading change| > u_turn; Left/RightTurn if it is
// >= turn; LaneChange if the nearest centerline at the end differs from the
// one at the start or the lateral offset from the start lane ever reaches
// lane_offset_fraction * width; Straight otherwise. Net heading change is
// the sum of wrapped per-step heading differences.
ActionClass ClassifyAction(const Trajectory& traj, const MapModel& map,
                           const ActionThresholds& thresholds = {});

struct ActionHistogram {
  std::array<std::size_t, 5> counts{};
  std::size_t total = 0;

  std::size_t Count(ActionClass action) const { return counts[static_cast<std::size_t>(action)]; }
  std::size_t NonStraight() const { return total - Count(ActionClass::kStraight); }
  void Add(ActionClass action);
  nlohmann::json ToJson() const;
};

ActionHistogram DatasetStats(std::span<const Scenario> scenarios,
                             const ActionThresholds& thresholds = {});

struct AvoidancePlan {
  std::string label;  // "expert", an extension label, or "yield@<t>"
  Trajectory trajectory;
};

// Ego trajectory that keeps d_min of footprint clearance from every other
// agent (the injected adversary included): the expert if it already does,
// else the first feasible lane change, else the latest braking yield along
// the expert path. nullopt when nothing works.
std::optional<AvoidancePlan> PlanAvoidingEgo(const Scenario& s, double d_min = 1.0);

}  // namespace bevsim
