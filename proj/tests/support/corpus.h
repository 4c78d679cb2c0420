#pragma once

// Synthetic scenario generators shared by the tests.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bevsim/daa.h"
#include "bevsim/kinematics.h"
#include "bevsim/scenario.h"

namespace bevsim::testing {

inline constexpr double kLaneWidth = 3.5;

// Straight road along +x. Forward lane i ("F<i>") is centered at y = 3.5 i,
// F0 rightmost. Opposite lanes ("O<j>") continue above the forward lanes
// and run towards -x. The optional parking lane ("P") sits right of F0.
struct RoadOptions {
  int forward_lanes = 3;
  int opposite_lanes = 0;
  bool parking_lane = false;
  double x_min = -80.0;
  double x_max = 320.0;
};

MapModel StraightRoad(const RoadOptions& options);
std::string ForwardLane(int i);
std::string OppositeLane(int j);
double ForwardLaneY(int i);
double OppositeLaneY(const RoadOptions& options, int j);

// Bicycle rollout sampled on GridTimes(dt, horizon) (timestamps taken from
// the grid, not accumulated).
Trajectory RolloutTrajectory(const AgentState& initial, std::span<const ControlInput> controls,
                             double dt, const KinematicParams& params);
Trajectory StraightTrajectory(const Pose2& start, double v, double dt, double horizon);

Agent MakeVehicle(const std::string& id, Trajectory trajectory,
                  AgentCategory category = AgentCategory::kCar);
Agent MakeStaticObstacle(const std::string& id, const Pose2& pose, double half_length = 1.0,
                         double half_width = 1.0);

struct StraightOptions {
  RoadOptions road;
  int ego_lane = 1;
  int traffic = 3;  // extra constant-speed vehicles
  double horizon = 8.0;
  double dt = kDefaultDt;
};

// Ego cruising in its lane among traffic that never comes closer than 1.5 m
// of footprint gap to the ego expert or to each other.
Scenario MakeStraightScenario(std::uint64_t seed, const StraightOptions& options = {});

// Ego on a single curved lane that turns by about +-pi/2 inside a large
// drivable square.
Scenario MakeTurnScenario(std::uint64_t seed, bool left, double horizon = 8.0);

// A scenario in which `kind` has a gated candidate ("adv") at t = 0 plus
// random traffic.
Scenario MakeBehaviorScenario(BehaviorKind kind, std::uint64_t seed);

// n scenarios; the first round(straight_fraction * n) are straight, the rest
// alternate left and right turns.
std::vector<Scenario> MakeMixedCorpus(std::size_t n, double straight_fraction, std::uint64_t seed);

}  // namespace bevsim::testing
