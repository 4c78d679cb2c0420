#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bevsim/errors.h"
#include "bevsim/geometry.h"

namespace bevsim {

inline constexpr double kDefaultDt = 0.1;
// Slack applied to every envelope bound so round-off never flips a verdict.
inline constexpr double kEnvelopeSlack = 1e-9;

enum class AgentCategory { kCar, kTruck, kBus, kPedestrian, kStaticObstacle };

std::string_view ToString(AgentCategory category);
std::optional<AgentCategory> ParseAgentCategory(std::string_view name);
bool IsVehicle(AgentCategory category);

// Operational envelope of one vehicle.
struct KinematicParams {
  double wheelbase = 2.8;   // m
  double delta_max = 0.6;   // rad, bound on |steering angle|
  double v_max = 20.0;      // m/s
  double v_min = 0.0;       // m/s
  double a_max = 4.0;       // m/s^2, bound on |speed change| per second

  // Throws InvalidArgument naming the violated field.
  void Validate() const;

  friend bool operator==(const KinematicParams&, const KinematicParams&) = default;
};

// Category defaults; nullopt for categories without vehicle dynamics.
std::optional<KinematicParams> DefaultKinematicParams(AgentCategory category);

struct AgentState {
  Pose2 pose;
  double v = 0.0;
  double delta = 0.0;
  double t = 0.0;

  friend bool operator==(const AgentState&, const AgentState&) = default;
};

struct ControlInput {
  double v = 0.0;
  double delta = 0.0;

  friend bool operator==(const ControlInput&, const ControlInput&) = default;
};

enum class EnvelopeBound { kSteering, kSpeed, kAcceleration };

std::string_view ToString(EnvelopeBound bound);

class EnvelopeViolation : public Error {
 public:
  EnvelopeViolation(EnvelopeBound bound, std::size_t step_index, const std::string& detail);

  EnvelopeBound bound() const { return bound_; }
  std::size_t step_index() const { return step_index_; }
  const std::string& detail() const { return detail_; }

  EnvelopeViolation AtStep(std::size_t step_index) const {
    return EnvelopeViolation(bound_, step_index, detail_);
  }

 private:
  EnvelopeBound bound_;
  std::size_t step_index_;
  std::string detail_;
};

// Heading increment of the bicycle model: (v / L) * tan(delta) * dt.
double HeadingIncrement(double v, double delta, double dt, double wheelbase);

// One bicycle-model step. The position advances along the current heading
// and the heading is then rotated by HeadingIncrement. Throws
// EnvelopeViolation (step index 0) when `u` leaves the envelope, and
// InvalidArgument when dt <= 0.
AgentState Step(const AgentState& state, const ControlInput& u, double dt,
                const KinematicParams& params);

// Returns controls.size() + 1 states starting with `initial`. Envelope
// violations are rethrown with the offending control index.
std::vector<AgentState> Rollout(const AgentState& initial, std::span<const ControlInput> controls,
                                double dt, const KinematicParams& params);

enum class KinematicConstraint { kSpeed, kAcceleration, kSteering };

std::string_view ToString(KinematicConstraint constraint);

struct KinematicVerdict {
  bool feasible = true;
  // First violating sample index (segment start for speed checks, vertex
  // otherwise). Meaningless when feasible.
  std::size_t index = 0;
  KinematicConstraint constraint = KinematicConstraint::kSpeed;
  std::string detail;
};

class MalformedTrajectory : public Error {
 public:
  using Error::Error;
};

// Checks a sampled path against the envelope: implied segment speeds, speed
// change between consecutive segments, and implied steering
// atan(L * kappa). The discrete curvature at vertex i is the turning angle
// at i divided by the length of the incoming segment, which is the exact
// inverse of Step. Vertices next to a segment shorter than 1 mm are skipped
// (steering is unobservable at standstill).
// Throws MalformedTrajectory on fewer than three samples or non-increasing
// timestamps.
KinematicVerdict CheckTrajectoryKinematics(std::span<const TimedPoint> traj,
                                           const KinematicParams& params);

}  // namespace bevsim
