#include "bevsim/daa.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "bevsim/canonical_json.h"
#include "bevsim/json_reader.h"

namespace bevsim {

using nlohmann::json;

namespace {

constexpr double kMinSegment = 1e-3;
constexpr double kPredicateSlack = 1e-6;

struct KindInfo {
  BehaviorKind kind;
  std::string_view name;
};

constexpr KindInfo kKindNames[] = {
    {BehaviorKind::kDynamicCutIn, "DynamicCutIn"},
    {BehaviorKind::kHardBrake, "HardBrake"},
    {BehaviorKind::kOppositeLaneIntrusion, "OppositeLaneIntrusion"},
    {BehaviorKind::kParkingCutIn, "ParkingCutIn"},
    {BehaviorKind::kBlockedIntersection, "BlockedIntersection"},
    {BehaviorKind::kHazardAtSideLane, "HazardAtSideLane"},
    {BehaviorKind::kWrongWayVehicle, "WrongWayVehicle"},
    {BehaviorKind::kLaneChangeConflict, "LaneChangeConflict"},
};

double* ParamField(BehaviorParams& p, std::string_view name) {
  if (name == "trigger_gap") return &p.trigger_gap;
  if (name == "lateral_duration") return &p.lateral_duration;
  if (name == "target_gap_after") return &p.target_gap_after;
  if (name == "decel") return &p.decel;
  if (name == "final_v") return &p.final_v;
  if (name == "start_time") return &p.start_time;
  if (name == "intrusion_depth") return &p.intrusion_depth;
  if (name == "accel") return &p.accel;
  if (name == "cruise_v") return &p.cruise_v;
  if (name == "lateral_distance") return &p.lateral_distance;
  if (name == "slow_v") return &p.slow_v;
  if (name == "lateral_offset") return &p.lateral_offset;
  return nullptr;
}

double ParamValue(const BehaviorParams& p, std::string_view name) {
  return *ParamField(const_cast<BehaviorParams&>(p), name);
}

// Speeds and times may be zero; everything else is a strictly positive
// gap, duration, rate or distance.
bool AllowsZero(std::string_view name) {
  return name == "final_v" || name == "start_time" || name == "slow_v";
}

LaneRelation ParseLaneRelation(const std::string& s, const std::string& ptr) {
  if (s == "SAME") return LaneRelation::kSame;
  if (s == "ADJACENT") return LaneRelation::kAdjacent;
  if (s == "OPPOSITE") return LaneRelation::kOpposite;
  throw SchemaError(ptr, "unknown lane relation '" + s + "'");
}

std::string Fmt(double v) { return FormatCanonicalFloat(v); }

}  // namespace

std::string_view ToString(BehaviorKind kind) {
  for (const KindInfo& k : kKindNames) {
    if (k.kind == kind) return k.name;
  }
  return "?";
}

std::optional<BehaviorKind> ParseBehaviorKind(std::string_view name) {
  for (const KindInfo& k : kKindNames) {
    if (k.name == name) return k.kind;
  }
  return std::nullopt;
}

std::string_view ToString(LaneRelation relation) {
  switch (relation) {
    case LaneRelation::kSame:
      return "SAME";
    case LaneRelation::kAdjacent:
      return "ADJACENT";
    case LaneRelation::kOpposite:
      return "OPPOSITE";
  }
  return "?";
}

std::string_view ToString(FeasibilityCheck check) {
  switch (check) {
    case FeasibilityCheck::kDrivable:
      return "DRIVABLE";
    case FeasibilityCheck::kClearance:
      return "CLEARANCE";
    case FeasibilityCheck::kKinematic:
      return "KINEMATIC";
    case FeasibilityCheck::kBehavior:
      return "BEHAVIOR";
  }
  return "?";
}

std::string_view ToString(AdversaryStatus status) {
  switch (status) {
    case AdversaryStatus::kInjected:
      return "injected";
    case AdversaryStatus::kNoCandidate:
      return "no_candidate";
    case AdversaryStatus::kSynthesisFailed:
      return "synthesis_failed";
    case AdversaryStatus::kInfeasible:
      return "infeasible";
  }
  return "?";
}

std::vector<std::string_view> RequiredParams(BehaviorKind kind) {
  switch (kind) {
    case BehaviorKind::kDynamicCutIn:
      return {"trigger_gap", "lateral_duration", "target_gap_after"};
    case BehaviorKind::kHardBrake:
      return {"decel", "final_v", "start_time"};
    case BehaviorKind::kOppositeLaneIntrusion:
      return {"trigger_gap", "lateral_duration", "intrusion_depth"};
    case BehaviorKind::kParkingCutIn:
      return {"trigger_gap", "accel", "cruise_v", "lateral_distance"};
    case BehaviorKind::kBlockedIntersection:
      return {"decel", "start_time"};
    case BehaviorKind::kHazardAtSideLane:
      return {"decel", "slow_v", "lateral_offset", "lateral_distance", "start_time"};
    case BehaviorKind::kWrongWayVehicle:
      return {"trigger_gap", "lateral_duration"};
    case BehaviorKind::kLaneChangeConflict:
      return {"trigger_gap", "lateral_duration"};
  }
  return {};
}

void BehaviorSpec::Validate() const {
  const std::string who = std::string(ToString(kind));
  for (std::string_view name : RequiredParams(kind)) {
    const double v = ParamValue(params, name);
    const bool ok = std::isfinite(v) && (AllowsZero(name) ? v >= 0.0 : v > 0.0);
    if (!ok) {
      throw InvalidArgument(who + ": " + std::string(name) + " must be " +
                            (AllowsZero(name) ? "non-negative" : "positive") + ", got " + Fmt(v));
    }
  }
  if (!(d_min > 0.0) || !std::isfinite(d_min)) throw InvalidArgument(who + ": d_min must be positive");
  if (!(gate.min_range >= 0.0) || !(gate.max_range > gate.min_range) ||
      !std::isfinite(gate.max_range)) {
    throw InvalidArgument(who + ": gate needs 0 <= min_range < max_range");
  }
  if (!(gate.heading_alignment_max > 0.0) || gate.heading_alignment_max > kPi) {
    throw InvalidArgument(who + ": heading_alignment_max must lie in (0, pi]");
  }
}

BehaviorSpec DefaultBehavior(BehaviorKind kind) {
  BehaviorSpec b;
  b.kind = kind;
  b.d_min = 1.0;
  BehaviorParams& p = b.params;
  switch (kind) {
    case BehaviorKind::kDynamicCutIn:
      b.gate = {5.0, 30.0, LaneRelation::kAdjacent, 0.35};
      p.trigger_gap = 30.0;
      p.lateral_duration = 3.0;
      p.target_gap_after = 5.0;
      break;
    case BehaviorKind::kHardBrake:
      b.gate = {5.0, 40.0, LaneRelation::kSame, 0.35};
      p.decel = 4.0;
      p.final_v = 0.0;
      p.start_time = 1.0;
      break;
    case BehaviorKind::kOppositeLaneIntrusion:
      b.gate = {10.0, 60.0, LaneRelation::kOpposite, 0.35};
      p.trigger_gap = 60.0;
      p.lateral_duration = 2.5;
      p.intrusion_depth = 0.8;
      break;
    case BehaviorKind::kParkingCutIn:
      b.gate = {5.0, 30.0, LaneRelation::kAdjacent, 0.35};
      p.trigger_gap = 30.0;
      p.accel = 2.0;
      p.cruise_v = 6.0;
      p.lateral_distance = 12.0;
      break;
    case BehaviorKind::kBlockedIntersection:
      b.gate = {10.0, 50.0, LaneRelation::kSame, 0.35};
      p.decel = 2.5;
      p.start_time = 0.5;
      break;
    case BehaviorKind::kHazardAtSideLane:
      b.gate = {10.0, 60.0, LaneRelation::kSame, 0.35};
      p.decel = 2.0;
      p.slow_v = 2.0;
      p.lateral_offset = 1.0;
      p.lateral_distance = 15.0;
      p.start_time = 0.5;
      break;
    case BehaviorKind::kWrongWayVehicle:
      b.gate = {20.0, 80.0, LaneRelation::kOpposite, 0.35};
      p.trigger_gap = 80.0;
      p.lateral_duration = 3.0;
      break;
    case BehaviorKind::kLaneChangeConflict:
      b.gate = {0.0, 15.0, LaneRelation::kAdjacent, 0.35};
      p.trigger_gap = 10.0;
      p.lateral_duration = 3.0;
      break;
  }
  return b;
}

std::vector<BehaviorSpec> DefaultBehaviorCatalog() {
  std::vector<BehaviorSpec> out;
  for (BehaviorKind k : kAllBehaviorKinds) out.push_back(DefaultBehavior(k));
  return out;
}

json BehaviorToJson(const BehaviorSpec& spec) {
  json params = json::object();
  for (std::string_view name : RequiredParams(spec.kind)) {
    params[std::string(name)] = ParamValue(spec.params, name);
  }
  return {{"kind", std::string(ToString(spec.kind))},
          {"params", std::move(params)},
          {"d_min", spec.d_min},
          {"gate",
           {{"min_range", spec.gate.min_range},
            {"max_range", spec.gate.max_range},
            {"lane_relation", std::string(ToString(spec.gate.lane_relation))},
            {"heading_alignment_max", spec.gate.heading_alignment_max}}}};
}

BehaviorSpec BehaviorFromJson(const json& j, const std::string& pointer) {
  ObjectReader r(j, pointer);
  const std::string kind_name = r.String("kind");
  const auto kind = ParseBehaviorKind(kind_name);
  if (!kind) throw SchemaError(r.Child("kind"), "unknown behavior kind '" + kind_name + "'");
  // Unspecified fields fall back to the shipped defaults of the kind.
  BehaviorSpec spec = DefaultBehavior(*kind);
  if (r.Has("params")) {
    ObjectReader p(r.Object("params"), r.Child("params"));
    for (std::string_view name : RequiredParams(*kind)) {
      if (auto v = p.OptionalNumber(name)) *ParamField(spec.params, name) = *v;
    }
    p.RejectUnknown();
  }
  if (auto v = r.OptionalNumber("d_min")) spec.d_min = *v;
  if (r.Has("gate")) {
    ObjectReader g(r.Object("gate"), r.Child("gate"));
    if (auto v = g.OptionalNumber("min_range")) spec.gate.min_range = *v;
    if (auto v = g.OptionalNumber("max_range")) spec.gate.max_range = *v;
    if (auto v = g.OptionalString("lane_relation")) {
      spec.gate.lane_relation = ParseLaneRelation(*v, g.Child("lane_relation"));
    }
    if (auto v = g.OptionalNumber("heading_alignment_max")) spec.gate.heading_alignment_max = *v;
    g.RejectUnknown();
  }
  r.RejectUnknown();
  try {
    spec.Validate();
  } catch (const InvalidArgument& e) {
    throw ValidationError(pointer, e.what());
  }
  return spec;
}

std::string SerializeBehaviorCatalog(const std::vector<BehaviorSpec>& catalog) {
  json arr = json::array();
  for (const BehaviorSpec& b : catalog) arr.push_back(BehaviorToJson(b));
  return DumpCanonical(json{{"behaviors", std::move(arr)}}, 2) + "\n";
}

std::vector<BehaviorSpec> ParseBehaviorCatalog(std::string_view text) {
  const json doc = ParseJsonText(text);
  ObjectReader r(doc, "");
  const json& arr = r.Array("behaviors");
  r.RejectUnknown();
  std::vector<BehaviorSpec> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string ptr = "/behaviors/" + std::to_string(i);
    BehaviorSpec b = BehaviorFromJson(arr[i], ptr);
    if (FindBehavior(out, b.kind)) {
      throw ValidationError(ptr + "/kind", "duplicate behavior kind '" +
                                               std::string(ToString(b.kind)) + "'");
    }
    out.push_back(b);
  }
  return out;
}

std::vector<BehaviorSpec> LoadBehaviorCatalog(const std::string& path) {
  return ParseBehaviorCatalog(ReadFile(path));
}

const BehaviorSpec* FindBehavior(const std::vector<BehaviorSpec>& catalog, BehaviorKind kind) {
  for (const BehaviorSpec& b : catalog) {
    if (b.kind == kind) return &b;
  }
  return nullptr;
}

// ---------------------------------------------------------------------------
// Shared helpers

double QuinticEase(double u) {
  u = std::clamp(u, 0.0, 1.0);
  return u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
}

std::optional<LaneFrame> EgoLaneFrame(const Scenario& s) {
  if (s.ego.trajectory.empty()) return std::nullopt;
  const auto pos = LaneAt(s.map, s.ego.trajectory.At(0.0).pose.position());
  if (!pos) return std::nullopt;
  return LaneFrame{pos->lane};
}

void RecomputeHeadings(Trajectory& traj, double initial_heading) {
  auto& smp = traj.samples;
  double prev = initial_heading;
  for (std::size_t k = 0; k < smp.size(); ++k) {
    if (k + 1 < smp.size()) {
      const Vec2 d = smp[k + 1].pose.position() - smp[k].pose.position();
      if (d.Norm() >= kMinSegment) prev = std::atan2(d.y, d.x);
    }
    smp[k].pose.theta = NormalizeAngle(prev);
  }
}

bool FeasibilityReport::Has(FeasibilityCheck check) const {
  return std::any_of(violations.begin(), violations.end(),
                     [&](const Violation& v) { return v.check == check; });
}

std::string FeasibilityReport::Summary() const {
  if (violations.empty()) return "FEASIBLE";
  std::ostringstream os;
  os << "INFEASIBLE";
  for (const Violation& v : violations) {
    os << "; " << ToString(v.check) << " at step " << v.step << ": " << v.detail;
  }
  return os.str();
}

json FeasibilityReport::ToJson() const {
  json arr = json::array();
  for (const Violation& v : violations) {
    arr.push_back({{"check", std::string(ToString(v.check))}, {"step", v.step}, {"detail", v.detail}});
  }
  return {{"verdict", feasible() ? "FEASIBLE" : "INFEASIBLE"}, {"violations", std::move(arr)}};
}

// ---------------------------------------------------------------------------
// Target selection

namespace {

enum class Relation { kNone, kSame, kAdjacent, kOpposite };

Relation RelationTo(const Lane& ego_lane, const Lane& other) {
  if (&other == &ego_lane) return Relation::kSame;
  if (other.direction != ego_lane.direction) return Relation::kOpposite;
  if (ego_lane.left_neighbor == other.id || ego_lane.right_neighbor == other.id) {
    return Relation::kAdjacent;
  }
  // Neighbor links may be recorded on one side only.
  if (other.left_neighbor == ego_lane.id || other.right_neighbor == ego_lane.id) {
    return Relation::kAdjacent;
  }
  return Relation::kNone;
}

bool RelationMatches(Relation r, LaneRelation wanted) {
  switch (wanted) {
    case LaneRelation::kSame:
      return r == Relation::kSame;
    case LaneRelation::kAdjacent:
      return r == Relation::kAdjacent;
    case LaneRelation::kOpposite:
      return r == Relation::kOpposite;
  }
  return false;
}

}  // namespace

std::optional<std::string> SelectTarget(const Scenario& s, const BehaviorSpec& behavior) {
  const auto frame = EgoLaneFrame(s);
  if (!frame) return std::nullopt;
  const Pose2 ego = s.ego.trajectory.At(0.0).pose;
  const double expected = behavior.gate.lane_relation == LaneRelation::kOpposite
                              ? NormalizeAngle(ego.theta + kPi)
                              : ego.theta;

  // Every template except the side-by-side conflict acts in front of ego.
  const bool needs_ahead = behavior.kind != BehaviorKind::kLaneChangeConflict;
  const double ego_s = frame->Project(ego.position()).s;

  const Agent* best = nullptr;
  double best_dist = std::numeric_limits<double>::infinity();
  for (const Agent& a : s.others) {
    if (!IsVehicle(a.category) || a.trajectory.size() < 2) continue;
    const Pose2 p = a.trajectory.At(0.0).pose;
    const double dist = Distance(p.position(), ego.position());
    if (dist < behavior.gate.min_range || dist > behavior.gate.max_range) continue;
    if (needs_ahead && frame->Project(p.position()).s <= ego_s) continue;
    const auto lane = LaneAt(s.map, p.position());
    if (!lane) continue;
    if (!RelationMatches(RelationTo(*frame->lane, *lane->lane), behavior.gate.lane_relation)) {
      continue;
    }
    if (std::abs(NormalizeAngle(p.theta - expected)) > behavior.gate.heading_alignment_max) continue;
    if (dist < best_dist || (dist == best_dist && best && a.id < best->id)) {
      best = &a;
      best_dist = dist;
    }
  }
  if (!best) return std::nullopt;
  return best->id;
}

// ---------------------------------------------------------------------------
// Feasibility

namespace {

// Ego-lane coordinates of a trajectory on the grid.
struct LaneTrack {
  std::vector<double> s;
  std::vector<double> l;
};

LaneTrack Track(const LaneFrame& frame, const Trajectory& traj) {
  LaneTrack t;
  for (const TrajectorySample& smp : traj.samples) {
    const auto proj = frame.Project(smp.pose.position());
    t.s.push_back(proj.s);
    t.l.push_back(proj.lateral);
  }
  return t;
}

std::vector<double> EgoStations(const Scenario& s, const LaneFrame& frame,
                                const std::vector<double>& grid) {
  std::vector<double> out;
  out.reserve(grid.size());
  for (double t : grid) out.push_back(frame.Project(s.ego.trajectory.At(t).pose.position()).s);
  return out;
}

// Lateral half-extent of the footprint across the lane at sample k.
double LateralExtent(const Agent& owner, const LaneFrame& frame, const TrajectorySample& smp) {
  const double h = frame.lane->centerline.HeadingAt(frame.Project(smp.pose.position()).s);
  const Vec2 normal{-std::sin(h), std::cos(h)};
  return SupportExtent(owner.FootprintAt(smp.pose), normal);
}

bool OpposesLane(const LaneFrame& frame, const TrajectorySample& smp, double s) {
  const double h = frame.lane->centerline.HeadingAt(s);
  return std::cos(smp.pose.theta - h) < 0.0;
}

std::optional<std::string> BehaviorFailure(const Scenario& s, const Trajectory& c,
                                           const Agent& owner, const BehaviorSpec& b) {
  const auto frame = EgoLaneFrame(s);
  if (!frame) return "ego does not start on a lane";
  const std::vector<double> grid = ScenarioGrid(s);
  const LaneTrack tr = Track(*frame, c);
  const std::vector<double> ego_s = EgoStations(s, *frame, grid);
  const double hw = frame->lane->half_width();
  const std::size_t n = c.size();
  const BehaviorParams& p = b.params;
  auto gap = [&](std::size_t k) { return tr.s[k] - ego_s[k]; };

  switch (b.kind) {
    case BehaviorKind::kDynamicCutIn:
    case BehaviorKind::kParkingCutIn: {
      if (std::abs(tr.l[0]) <= hw) return "target starts inside the ego lane";
      for (std::size_t k = 0; k < n; ++k) {
        if (std::abs(tr.l[k]) < hw && gap(k) > 0.0) return std::nullopt;
      }
      return "target never enters the ego lane ahead of the ego vehicle";
    }
    case BehaviorKind::kLaneChangeConflict: {
      if (std::abs(tr.l[0]) <= hw) return "target starts inside the ego lane";
      for (std::size_t k = 0; k < n; ++k) {
        if (std::abs(tr.l[k]) < hw && std::abs(gap(k)) <= p.trigger_gap) return std::nullopt;
      }
      return "target never enters the ego lane alongside the ego vehicle";
    }
    case BehaviorKind::kHardBrake: {
      double max_drop = -std::numeric_limits<double>::infinity();
      double min_v = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < n; ++k) {
        min_v = std::min(min_v, c.samples[k].v);
        if (k + 1 < n) max_drop = std::max(max_drop, c.samples[k].v - c.samples[k + 1].v);
      }
      if (max_drop < p.decel * s.dt - kPredicateSlack) {
        return "peak deceleration " + Fmt(max_drop / s.dt) + " below " + Fmt(p.decel);
      }
      if (min_v > p.final_v + kPredicateSlack) {
        return "speed never reaches " + Fmt(p.final_v) + " (min " + Fmt(min_v) + ")";
      }
      return std::nullopt;
    }
    case BehaviorKind::kBlockedIntersection: {
      const std::size_t k = n - 1;
      if (std::abs(c.samples[k].v) > kPredicateSlack) return "target is still moving at the horizon";
      if (std::abs(tr.l[k]) >= hw) return "target does not stop inside the ego lane";
      if (tr.s[k] <= ego_s[0]) return "target stops behind the ego start";
      return std::nullopt;
    }
    case BehaviorKind::kHazardAtSideLane: {
      double min_v = std::numeric_limits<double>::infinity();
      for (const TrajectorySample& smp : c.samples) min_v = std::min(min_v, smp.v);
      if (min_v > p.slow_v + kPredicateSlack) return "target never slows to " + Fmt(p.slow_v);
      const std::size_t k = n - 1;
      if (std::abs(tr.l[k]) - LateralExtent(owner, *frame, c.samples[k]) >= hw) {
        return "target does not overlap the ego lane at the horizon";
      }
      return std::nullopt;
    }
    case BehaviorKind::kOppositeLaneIntrusion: {
      if (std::abs(tr.l[0]) - LateralExtent(owner, *frame, c.samples[0]) < hw) {
        return "target already overlaps the ego lane at t=0";
      }
      for (std::size_t k = 0; k < n; ++k) {
        if (std::abs(tr.l[k]) - LateralExtent(owner, *frame, c.samples[k]) < hw && gap(k) > 0.0 &&
            OpposesLane(*frame, c.samples[k], tr.s[k])) {
          return std::nullopt;
        }
      }
      return "target never intrudes into the ego lane against traffic";
    }
    case BehaviorKind::kWrongWayVehicle: {
      for (std::size_t k = 0; k < n; ++k) {
        if (std::abs(tr.l[k]) < hw && gap(k) > 0.0 && OpposesLane(*frame, c.samples[k], tr.s[k])) {
          return std::nullopt;
        }
      }
      return "target never drives against traffic inside the ego lane";
    }
  }
  return "unknown behavior";
}

}  // namespace

FeasibilityReport CheckFeasibility(const Scenario& s, const Trajectory& candidate,
                                   const std::string& owner_id,
                                   const std::optional<BehaviorSpec>& behavior, double d_min) {
  const std::vector<double> grid = ScenarioGrid(s);
  if (candidate.size() != grid.size()) {
    throw GridMismatch("candidate has " + std::to_string(candidate.size()) +
                       " samples, scenario grid has " + std::to_string(grid.size()));
  }
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (std::abs(candidate.samples[k].t - grid[k]) > kTimeTolerance) {
      throw GridMismatch("sample " + std::to_string(k) + " at t=" + Fmt(candidate.samples[k].t) +
                         " is off the grid (expected " + Fmt(grid[k]) + ")");
    }
  }
  const Agent* owner = s.FindAgent(owner_id);
  if (!owner) throw InvalidArgument("unknown agent '" + owner_id + "'");

  FeasibilityReport report;

  // DRIVABLE
  {
    std::size_t outside = 0;
    std::size_t first = 0;
    for (std::size_t k = 0; k < candidate.size(); ++k) {
      if (!s.map.IsDrivable(candidate.samples[k].pose.position())) {
        if (outside++ == 0) first = k;
      }
    }
    if (outside > 0) {
      report.violations.push_back({FeasibilityCheck::kDrivable, first,
                                   std::to_string(outside) + " of " +
                                       std::to_string(candidate.size()) +
                                       " samples outside the drivable area"});
    }
  }

  // CLEARANCE
  {
    std::vector<const Agent*> others;
    for (const Agent& a : s.others) {
      if (a.id != owner_id) others.push_back(&a);
    }
    std::sort(others.begin(), others.end(),
              [](const Agent* a, const Agent* b) { return a->id < b->id; });
    for (const Agent* a : others) {
      double worst = std::numeric_limits<double>::infinity();
      std::size_t first = 0;
      bool hit = false;
      for (std::size_t k = 0; k < grid.size(); ++k) {
        const OrientedBox mine = owner->FootprintAt(candidate.samples[k].pose);
        const OrientedBox theirs = a->FootprintAt(a->trajectory.At(grid[k]).pose);
        const double gap = CenterLineGap(mine, theirs);
        if (gap < d_min) {
          if (!hit) first = k;
          hit = true;
          worst = std::min(worst, gap);
        }
      }
      if (hit) {
        report.violations.push_back({FeasibilityCheck::kClearance, first,
                                     "footprint gap to '" + a->id + "' drops to " + Fmt(worst) +
                                         " m (< " + Fmt(d_min) + ")"});
      }
    }
  }

  // KINEMATIC
  if (owner->kinematics && candidate.size() >= 3) {
    const TimedPath path = candidate.Path();
    const KinematicVerdict v = CheckTrajectoryKinematics(path, *owner->kinematics);
    if (!v.feasible) {
      report.violations.push_back(
          {FeasibilityCheck::kKinematic, v.index,
           std::string(ToString(v.constraint)) + ": " + v.detail});
    }
  }

  // BEHAVIOR
  if (behavior) {
    if (auto why = BehaviorFailure(s, candidate, *owner, *behavior)) {
      report.violations.push_back({FeasibilityCheck::kBehavior, 0,
                                   std::string(ToString(behavior->kind)) + ": " + *why});
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Synthesis

namespace {

[[noreturn]] void Fail(BehaviorKind kind, const std::string& why) {
  throw SynthesisFailed(std::string(ToString(kind)) + ": " + why);
}

Polyline PathOf(const Trajectory& traj) {
  std::vector<Vec2> pts;
  for (const TrajectorySample& smp : traj.samples) {
    const Vec2 p = smp.pose.position();
    if (pts.empty() || Distance(pts.back(), p) > 1e-8) pts.push_back(p);
  }
  if (pts.size() < 2) {
    const Pose2& pose = traj.front().pose;
    pts = {pose.position(), pose.position() + UnitVector(pose.theta)};
  }
  return Polyline(std::move(pts));
}

// Speed approaches `v_target` at `rate` once t passes `start`.
double ApproachSpeed(double v0, double v_target, double rate, double elapsed) {
  if (elapsed <= 0.0) return v0;
  if (v0 > v_target) return std::max(v_target, v0 - rate * elapsed);
  return std::min(v_target, v0 + rate * elapsed);
}

struct Retime {
  std::size_t k_start = 0;  // first regenerated sample
  double start_time = 0.0;  // onset of the speed change
  double v_target = 0.0;
  double rate = 0.0;
  const Polyline* frame = nullptr;
  double lateral_delta = 0.0;     // lateral shift reached after lateral_distance
  double lateral_distance = 1.0;  // m of travel over which the shift eases in
};

// Regenerates samples k >= k_start by integrating the speed profile along
// `frame` (trapezoid rule) from the anchor sample max(k_start - 1, 0).
// Samples before k_start are copied. Stored speeds follow the profile.
Trajectory RetimeAlong(const Trajectory& orig, const std::vector<double>& grid, const Retime& r) {
  Trajectory out = orig;
  const std::size_t anchor = r.k_start == 0 ? 0 : r.k_start - 1;
  const auto proj = r.frame->Project(orig.samples[anchor].pose.position());
  const double a0 = proj.s;
  const double l0 = proj.lateral;
  const double v0 = orig.samples[anchor].v;
  double a = a0;
  double v_prev = v0;
  for (std::size_t k = r.k_start; k < grid.size(); ++k) {
    const double v = ApproachSpeed(v0, r.v_target, r.rate, grid[k] - r.start_time);
    if (k > anchor) a += 0.5 * (v_prev + v) * (grid[k] - grid[k - 1]);
    const double l = l0 + r.lateral_delta * QuinticEase((a - a0) / r.lateral_distance);
    const Vec2 p = r.frame->ToCartesian(a, l);
    out.samples[k].pose.x = p.x;
    out.samples[k].pose.y = p.y;
    out.samples[k].v = v;
    v_prev = v;
  }
  return out;
}

std::size_t FirstIndexAtOrAfter(const std::vector<double>& grid, double t) {
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (grid[k] >= t - kTimeTolerance) return k;
  }
  return grid.size();
}

// Lateral ease in the ego-lane frame from sample k0 over `duration`
// seconds, towards lateral offset `goal`.
Trajectory LateralEase(const Trajectory& orig, const std::vector<double>& grid,
                       const LaneFrame& frame, const LaneTrack& tr, std::size_t k0,
                       double duration, double goal) {
  Trajectory out = orig;
  const double delta = goal - tr.l[k0];
  for (std::size_t k = k0; k < grid.size(); ++k) {
    const double e = QuinticEase((grid[k] - grid[k0]) / duration);
    const Vec2 p = frame.ToCartesian(tr.s[k], tr.l[k] + e * delta);
    out.samples[k].pose.x = p.x;
    out.samples[k].pose.y = p.y;
  }
  for (std::size_t k = std::max<std::size_t>(k0, 1); k < grid.size(); ++k) {
    out.samples[k].v = Distance(out.samples[k].pose.position(), out.samples[k - 1].pose.position()) /
                       (grid[k] - grid[k - 1]);
  }
  return out;
}

std::size_t WindowSteps(double duration, double dt) {
  return static_cast<std::size_t>(std::ceil(duration / dt - 1e-9));
}

}  // namespace

Trajectory BrakeAlongPath(const Trajectory& on_grid, const std::vector<double>& grid,
                          double start_time, double decel, double final_v) {
  const Polyline path = PathOf(on_grid);
  Retime r;
  r.k_start = FirstIndexAtOrAfter(grid, start_time);
  r.start_time = start_time;
  r.v_target = final_v;
  r.rate = decel;
  r.frame = &path;
  if (r.k_start >= grid.size()) return on_grid;
  Trajectory out = RetimeAlong(on_grid, grid, r);
  RecomputeHeadings(out, on_grid.front().pose.theta);
  return out;
}

Trajectory SynthesizeAdversary(const Scenario& s, const std::string& target,
                               const BehaviorSpec& behavior) {
  behavior.Validate();
  const BehaviorKind kind = behavior.kind;
  const BehaviorParams& p = behavior.params;
  const Agent* agent = s.FindAgent(target);
  if (!agent || agent == &s.ego) Fail(kind, "unknown target '" + target + "'");
  if (!agent->kinematics) Fail(kind, "target '" + target + "' is not a vehicle");
  const KinematicParams& kin = *agent->kinematics;
  const auto frame = EgoLaneFrame(s);
  if (!frame) Fail(kind, "ego does not start on a lane");

  const std::vector<double> grid = ScenarioGrid(s);
  const double dt = s.dt;
  const Trajectory orig = Resample(agent->trajectory, s.dt, s.horizon);
  const LaneTrack tr = Track(*frame, orig);
  const std::vector<double> ego_s = EgoStations(s, *frame, grid);
  const std::size_t n = grid.size();
  const double hw = frame->lane->half_width();
  auto gap = [&](std::size_t k) { return tr.s[k] - ego_s[k]; };

  Trajectory out;
  switch (kind) {
    case BehaviorKind::kDynamicCutIn:
    case BehaviorKind::kLaneChangeConflict: {
      if (std::abs(tr.l[0]) <= hw) Fail(kind, "target already in the ego lane");
      const std::size_t w = WindowSteps(p.lateral_duration, dt);
      std::optional<std::size_t> k0;
      for (std::size_t k = 0; k + w < n && !k0; ++k) {
        if (kind == BehaviorKind::kLaneChangeConflict) {
          if (std::abs(gap(k)) <= p.trigger_gap) k0 = k;
          continue;
        }
        if (gap(k) > p.trigger_gap) continue;
        bool ahead = true;
        for (std::size_t j = k; j <= k + w && ahead; ++j) ahead = gap(j) >= p.target_gap_after;
        if (ahead) k0 = k;
      }
      if (!k0) Fail(kind, "no instant satisfies the gap conditions within the horizon");
      out = LateralEase(orig, grid, *frame, tr, *k0, p.lateral_duration, 0.0);
      break;
    }
    case BehaviorKind::kOppositeLaneIntrusion:
    case BehaviorKind::kWrongWayVehicle: {
      const double sign = tr.l[0] >= 0.0 ? 1.0 : -1.0;
      double goal = 0.0;
      if (kind == BehaviorKind::kOppositeLaneIntrusion) {
        goal = sign * (hw + LateralExtent(*agent, *frame, orig.samples[0]) - p.intrusion_depth);
        if (std::abs(goal) >= std::abs(tr.l[0])) Fail(kind, "target already intrudes that deep");
      }
      const std::size_t w = WindowSteps(p.lateral_duration, dt);
      std::optional<std::size_t> k0;
      for (std::size_t k = 0; k + w < n && !k0; ++k) {
        if (gap(k) > 0.0 && gap(k) <= p.trigger_gap) k0 = k;
      }
      if (!k0) Fail(kind, "target is never ahead within the trigger gap");
      out = LateralEase(orig, grid, *frame, tr, *k0, p.lateral_duration, goal);
      break;
    }
    case BehaviorKind::kHardBrake:
    case BehaviorKind::kBlockedIntersection:
    case BehaviorKind::kHazardAtSideLane: {
      const double final_v = kind == BehaviorKind::kHardBrake         ? p.final_v
                             : kind == BehaviorKind::kHazardAtSideLane ? p.slow_v
                                                                       : 0.0;
      if (p.decel > kin.a_max + kEnvelopeSlack) {
        Fail(kind, "decel " + Fmt(p.decel) + " exceeds the target's a_max " + Fmt(kin.a_max));
      }
      Retime r;
      r.k_start = FirstIndexAtOrAfter(grid, p.start_time);
      if (r.k_start >= n) Fail(kind, "start_time is beyond the horizon");
      const double v0 = orig.samples[r.k_start == 0 ? 0 : r.k_start - 1].v;
      if (v0 <= final_v + kPredicateSlack) Fail(kind, "target is not faster than the final speed");
      r.start_time = p.start_time;
      r.v_target = final_v;
      r.rate = p.decel;
      const Polyline path = PathOf(orig);
      r.frame = &path;
      if (kind == BehaviorKind::kHazardAtSideLane) {
        r.lateral_delta = -p.lateral_offset;
        r.lateral_distance = p.lateral_distance;
      }
      out = RetimeAlong(orig, grid, r);
      break;
    }
    case BehaviorKind::kParkingCutIn: {
      if (std::abs(tr.l[0]) <= hw) Fail(kind, "target already in the ego lane");
      if (p.accel > kin.a_max + kEnvelopeSlack) {
        Fail(kind, "accel " + Fmt(p.accel) + " exceeds the target's a_max " + Fmt(kin.a_max));
      }
      if (p.cruise_v > kin.v_max) Fail(kind, "cruise_v exceeds the target's v_max");
      std::optional<std::size_t> k0;
      for (std::size_t k = 0; k + 1 < n && !k0; ++k) {
        if (gap(k) > 0.0 && gap(k) <= p.trigger_gap) k0 = k;
      }
      if (!k0) Fail(kind, "target is never ahead within the trigger gap");
      Retime r;
      r.k_start = *k0 + 1;
      r.start_time = grid[*k0];
      r.v_target = p.cruise_v;
      r.rate = p.accel;
      r.frame = &frame->lane->centerline;
      r.lateral_delta = -tr.l[*k0];
      r.lateral_distance = p.lateral_distance;
      out = RetimeAlong(orig, grid, r);
      break;
    }
  }
  RecomputeHeadings(out, orig.front().pose.theta);

  const FeasibilityReport report = CheckFeasibility(s, out, target, behavior);
  if (!report.feasible()) Fail(kind, "synthesized trajectory rejected: " + report.Summary());
  return out;
}

// ---------------------------------------------------------------------------
// Perturbation

double DrawSpeedScale(std::uint64_t seed, const SpeedScaleBounds& bounds) {
  if (!(bounds.lo > 0.0) || !(bounds.hi >= bounds.lo) || !std::isfinite(bounds.hi)) {
    throw InvalidArgument("speed-scale bounds must satisfy 0 < lo <= hi");
  }
  std::mt19937_64 rng(seed);
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return bounds.lo + u * (bounds.hi - bounds.lo);
}

namespace {

// Largest speed u from which the step speeds u, u - decel*dt, ... (the
// last one the remainder) cover at most `remaining` metres before the stop.
double StoppableSpeed(double remaining, double decel, double dt) {
  if (remaining <= 0.0) return 0.0;
  const double dv = decel * dt;
  for (int n = 0;; ++n) {
    // n full decrements before the remainder: distance = dt * ((n+1) u - dv n (n+1) / 2).
    const double u = (remaining / dt + dv * n * (n + 1) / 2.0) / (n + 1);
    if (u < (n + 1) * dv) return u;
  }
}

}  // namespace

Trajectory PerturbWithFactor(const Trajectory& traj, double factor, double dt, double horizon,
                             std::optional<double> stop_decel) {
  if (!(factor > 0.0) || !std::isfinite(factor)) throw InvalidArgument("factor must be positive");
  if (traj.empty()) throw InvalidArgument("cannot perturb an empty trajectory");
  Trajectory warped = traj;
  for (TrajectorySample& smp : warped.samples) {
    smp.t /= factor;
    smp.v *= factor;
  }
  Trajectory out = Resample(warped, dt, horizon);
  if (!stop_decel || traj.size() < 2 || warped.back().t >= horizon - kTimeTolerance) return out;
  if (!(*stop_decel > 0.0)) throw InvalidArgument("stop deceleration must be positive");

  // The sped-up replay runs out of path before the horizon: cap the speed so
  // that the agent brakes to a stop at the path end instead of halting.
  std::vector<double> arc(traj.size(), 0.0);
  for (std::size_t i = 1; i < traj.size(); ++i) {
    arc[i] = arc[i - 1] + Distance(traj.samples[i - 1].pose.position(), traj.samples[i].pose.position());
  }
  const double total = arc.back();
  auto arc_at = [&](double t) {  // arc length of `warped` at time t
    if (t <= warped.front().t) return 0.0;
    for (std::size_t i = 1; i < warped.size(); ++i) {
      if (t <= warped.samples[i].t) {
        const double f = (t - warped.samples[i - 1].t) / (warped.samples[i].t - warped.samples[i - 1].t);
        return arc[i - 1] + f * (arc[i] - arc[i - 1]);
      }
    }
    return total;
  };
  auto time_at_arc = [&](double s) {  // original time at arc length s
    for (std::size_t i = 1; i < traj.size(); ++i) {
      if (s <= arc[i] && arc[i] > arc[i - 1]) {
        const double f = std::max(0.0, (s - arc[i - 1]) / (arc[i] - arc[i - 1]));
        return traj.samples[i - 1].t + f * (traj.samples[i].t - traj.samples[i - 1].t);
      }
    }
    return traj.back().t;
  };

  double prev = arc_at(out.front().t);
  for (std::size_t k = 1; k < out.size(); ++k) {
    const double desired = arc_at(out.samples[k].t);
    const double cap = prev + StoppableSpeed(total - prev, *stop_decel, dt) * dt;
    if (desired <= cap) {
      if (out.samples[k].t > warped.back().t) out.samples[k].v = (desired - prev) / dt;
      prev = desired;
      continue;
    }
    const double speed = (cap - prev) / dt;
    const TrajectorySample at = traj.At(time_at_arc(cap));
    out.samples[k].pose = at.pose;
    out.samples[k].v = speed;
    prev = cap;
  }
  return out;
}

Trajectory Perturb(const Trajectory& traj, std::uint64_t seed, const SpeedScaleBounds& bounds,
                   double dt, double horizon, std::optional<double> stop_decel) {
  return PerturbWithFactor(traj, DrawSpeedScale(seed, bounds), dt, horizon, stop_decel);
}

// ---------------------------------------------------------------------------
// Pipeline

AdversaryOutcome RunAdversaryPipeline(const Scenario& s, const BehaviorSpec& behavior,
                                      const AdversaryOptions& options) {
  AdversaryOutcome out;
  const auto target = SelectTarget(s, behavior);
  if (!target) {
    out.status = AdversaryStatus::kNoCandidate;
    out.reason = "no vehicle satisfies the " + std::string(ToString(behavior.kind)) + " gate";
    return out;
  }
  out.target = *target;
  try {
    out.unperturbed = SynthesizeAdversary(s, *target, behavior);
  } catch (const SynthesisFailed& e) {
    out.status = AdversaryStatus::kSynthesisFailed;
    out.reason = e.what();
    return out;
  }
  out.trajectory = out.unperturbed;

  std::mt19937_64 rng(options.seed);
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  if (u < options.p_perturb) {
    out.perturbed = true;
    out.speed_scale = DrawSpeedScale(rng(), options.bounds);
    const Agent* owner = s.FindAgent(*target);
    std::optional<double> stop_decel;
    if (owner && owner->kinematics) stop_decel = kStopDecelFraction * owner->kinematics->a_max;
    out.trajectory =
        PerturbWithFactor(out.unperturbed, out.speed_scale, s.dt, s.horizon, stop_decel);
    RecomputeHeadings(out.trajectory, out.unperturbed.front().pose.theta);
  }
  out.report = CheckFeasibility(s, out.trajectory, *target, behavior);
  if (out.report.feasible()) {
    out.status = AdversaryStatus::kInjected;
  } else {
    out.status = AdversaryStatus::kInfeasible;
    out.reason = out.report.Summary();
  }
  return out;
}

Scenario InjectAdversary(const Scenario& s, const std::string& target, const Trajectory& trajectory,
                         json params) {
  Scenario edited = s;
  bool found = false;
  for (Agent& a : edited.others) {
    if (a.id == target) {
      a.trajectory = trajectory;
      found = true;
    }
  }
  if (!found) throw InvalidArgument("unknown target '" + target + "'");
  params["target"] = target;
  edited.provenance = Provenance{s.id, "adversary", std::move(params)};
  edited.id = s.id + "-adversary";
  return edited;
}

}  // namespace bevsim
