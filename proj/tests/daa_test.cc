#include "bevsim/daa.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "corpus.h"

namespace bevsim {
namespace {

using nlohmann::json;
using testing::ForwardLaneY;
using testing::MakeBehaviorScenario;
using testing::MakeStraightScenario;
using testing::MakeVehicle;
using testing::StraightTrajectory;

TEST(BehaviorCatalog, DefaultsRoundTrip) {
  const auto catalog = DefaultBehaviorCatalog();
  ASSERT_EQ(catalog.size(), std::size(kAllBehaviorKinds));
  for (std::size_t i = 0; i < catalog.size(); ++i) {
    EXPECT_EQ(catalog[i].kind, kAllBehaviorKinds[i]);
    EXPECT_NO_THROW(catalog[i].Validate());
  }
  const std::string text = SerializeBehaviorCatalog(catalog);
  EXPECT_EQ(ParseBehaviorCatalog(text), catalog);
  EXPECT_EQ(SerializeBehaviorCatalog(ParseBehaviorCatalog(text)), text);
}

TEST(BehaviorCatalog, DefaultGates) {
  const DistanceGate cut_in = DefaultBehavior(BehaviorKind::kDynamicCutIn).gate;
  EXPECT_EQ(cut_in.min_range, 5.0);
  EXPECT_EQ(cut_in.max_range, 30.0);
  EXPECT_EQ(cut_in.lane_relation, LaneRelation::kAdjacent);
  const DistanceGate brake = DefaultBehavior(BehaviorKind::kHardBrake).gate;
  EXPECT_EQ(brake.min_range, 5.0);
  EXPECT_EQ(brake.max_range, 40.0);
  EXPECT_EQ(brake.lane_relation, LaneRelation::kSame);
  const DistanceGate intrusion = DefaultBehavior(BehaviorKind::kOppositeLaneIntrusion).gate;
  EXPECT_EQ(intrusion.min_range, 10.0);
  EXPECT_EQ(intrusion.max_range, 60.0);
  EXPECT_EQ(intrusion.lane_relation, LaneRelation::kOpposite);
}

TEST(BehaviorCatalog, PartialEntriesFallBackToDefaults) {
  const auto catalog = ParseBehaviorCatalog(
      R"({"behaviors": [{"kind": "HardBrake", "params": {"decel": 3.0}}]})");
  ASSERT_EQ(catalog.size(), 1u);
  BehaviorSpec expected = DefaultBehavior(BehaviorKind::kHardBrake);
  expected.params.decel = 3.0;
  EXPECT_EQ(catalog[0], expected);
}

TEST(BehaviorCatalog, RejectsBadEntries) {
  EXPECT_THROW(ParseBehaviorCatalog(R"({"behaviors": [{"kind": "Teleport"}]})"), SchemaError);
  EXPECT_THROW(
      ParseBehaviorCatalog(R"({"behaviors": [{"kind": "HardBrake", "params": {"accel": 1}}]})"),
      SchemaError);
  EXPECT_THROW(ParseBehaviorCatalog(R"({"behaviors": [{"kind": "HardBrake", "d_min": -1}]})"),
               ValidationError);
  EXPECT_THROW(ParseBehaviorCatalog("[1, 2"), ParseError);
}

TEST(BehaviorKind, NamesRoundTrip) {
  for (BehaviorKind k : kAllBehaviorKinds) EXPECT_EQ(ParseBehaviorKind(ToString(k)), k);
  EXPECT_FALSE(ParseBehaviorKind("dynamiccutin"));
}

Scenario EmptyRoad() {
  Scenario s = MakeStraightScenario(1, {.road = {}, .traffic = 0});
  return s;
}

TEST(SelectTarget, UniqueAdjacentCandidate) {
  Scenario s = EmptyRoad();
  const Pose2 ego = s.ego.trajectory.front().pose;
  s.others.push_back(MakeVehicle(
      "adv", StraightTrajectory({ego.x + 15.0, ForwardLaneY(2), 0.0}, 8.0, s.dt, s.horizon)));
  EXPECT_EQ(SelectTarget(s, DefaultBehavior(BehaviorKind::kDynamicCutIn)), "adv");
  // Same lane and opposite lane gates do not admit it.
  EXPECT_FALSE(SelectTarget(s, DefaultBehavior(BehaviorKind::kHardBrake)));
  EXPECT_FALSE(SelectTarget(s, DefaultBehavior(BehaviorKind::kOppositeLaneIntrusion)));
}

TEST(SelectTarget, EmptyRoadHasNoCandidate) {
  const Scenario s = EmptyRoad();
  for (BehaviorKind k : kAllBehaviorKinds) EXPECT_FALSE(SelectTarget(s, DefaultBehavior(k)));
}

TEST(SelectTarget, OutOfRangeAndBehindAreSkipped) {
  Scenario s = EmptyRoad();
  const Pose2 ego = s.ego.trajectory.front().pose;
  s.others.push_back(MakeVehicle(
      "far", StraightTrajectory({ego.x + 45.0, ForwardLaneY(2), 0.0}, 8.0, s.dt, s.horizon)));
  s.others.push_back(MakeVehicle(
      "behind", StraightTrajectory({ego.x - 12.0, ForwardLaneY(2), 0.0}, 8.0, s.dt, s.horizon)));
  EXPECT_FALSE(SelectTarget(s, DefaultBehavior(BehaviorKind::kDynamicCutIn)));
}

TEST(SelectTarget, TiesBreakByLexicographicId) {
  Scenario s = EmptyRoad();
  const Pose2 ego = s.ego.trajectory.front().pose;
  s.others.push_back(MakeVehicle(
      "zeta", StraightTrajectory({ego.x + 12.0, ForwardLaneY(2), 0.0}, 8.0, s.dt, s.horizon)));
  s.others.push_back(MakeVehicle(
      "alpha", StraightTrajectory({ego.x + 12.0, ForwardLaneY(0), 0.0}, 8.0, s.dt, s.horizon)));
  EXPECT_EQ(SelectTarget(s, DefaultBehavior(BehaviorKind::kDynamicCutIn)), "alpha");
}

TEST(SelectTarget, DeterministicAndOrderInvariant) {
  std::mt19937_64 rng(7);
  for (BehaviorKind k : kAllBehaviorKinds) {
    const BehaviorSpec b = DefaultBehavior(k);
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
      Scenario s = MakeBehaviorScenario(k, seed);
      const auto first = SelectTarget(s, b);
      EXPECT_EQ(SelectTarget(s, b), first);
      for (int r = 0; r < 3; ++r) {
        std::shuffle(s.others.begin(), s.others.end(), rng);
        EXPECT_EQ(SelectTarget(s, b), first) << ToString(k) << " seed " << seed;
      }
    }
  }
}

// Footprint gap along the center-to-center line, computed from the box
// axes directly.
double GapOracle(const Agent& a, const Pose2& pa, const Agent& b, const Pose2& pb) {
  const Vec2 d = pb.position() - pa.position();
  const double dist = d.Norm();
  if (dist == 0.0) return -1.0;
  const Vec2 u = d * (1.0 / dist);
  auto extent = [&](const Agent& ag, const Pose2& p) {
    const Vec2 e1 = UnitVector(p.theta);
    const Vec2 e2{-e1.y, e1.x};
    return ag.half_length * std::abs(u.Dot(e1)) + ag.half_width * std::abs(u.Dot(e2));
  };
  return dist - extent(a, pa) - extent(b, pb);
}

// Straight road along +x: lateral offset from the ego lane is |y - y_ego|.
bool CutInOracle(const Scenario& s, const Agent& target, const Trajectory& traj) {
  const double y_lane = s.ego.trajectory.front().pose.y;
  const double hw = 0.5 * testing::kLaneWidth;
  if (std::abs(traj.front().pose.y - y_lane) <= hw) return false;
  for (const TrajectorySample& smp : traj.samples) {
    if (std::abs(smp.pose.y - y_lane) < hw) {
      const double ego_x = s.ego.trajectory.At(smp.t).pose.x;
      return smp.pose.x > ego_x;
    }
  }
  (void)target;
  return false;
}

TEST(SynthesizeAdversary, OutputsPassTheirOwnChecksAndOracles) {
  for (BehaviorKind k : kAllBehaviorKinds) {
    const BehaviorSpec b = DefaultBehavior(k);
    int produced = 0;
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
      const Scenario s = MakeBehaviorScenario(k, seed);
      const auto target = SelectTarget(s, b);
      ASSERT_TRUE(target) << ToString(k) << " seed " << seed;
      Trajectory out;
      try {
        out = SynthesizeAdversary(s, *target, b);
      } catch (const SynthesisFailed&) {
        continue;
      }
      ++produced;
      const auto grid = ScenarioGrid(s);
      ASSERT_EQ(out.size(), grid.size());
      for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_NEAR(out.samples[i].t, grid[i], 1e-9);
      EXPECT_TRUE(CheckFeasibility(s, out, *target, b).feasible());
      const Agent& owner = *s.FindAgent(*target);
      for (const Agent& other : s.others) {
        if (other.id == owner.id) continue;
        for (std::size_t i = 0; i < grid.size(); ++i) {
          const Pose2 theirs = other.trajectory.At(grid[i]).pose;
          EXPECT_GE(GapOracle(owner, out.samples[i].pose, other, theirs), b.d_min - 1e-9);
          EXPECT_GE(Distance(out.samples[i].pose.position(), theirs.position()), b.d_min);
        }
      }
      if (k == BehaviorKind::kDynamicCutIn || k == BehaviorKind::kParkingCutIn) {
        EXPECT_TRUE(CutInOracle(s, owner, out)) << ToString(k) << " seed " << seed;
      }
    }
    EXPECT_GT(produced, 15) << ToString(k);
  }
}

TEST(SynthesizeAdversary, CutInEaseMidpointIsHalfTheLaneGap) {
  Scenario s = EmptyRoad();
  const Pose2 ego = s.ego.trajectory.front().pose;
  const double v = s.ego.trajectory.front().v;
  s.others.push_back(MakeVehicle(
      "adv", StraightTrajectory({ego.x + 20.0, ForwardLaneY(2), 0.0}, v, s.dt, s.horizon)));
  BehaviorSpec b = DefaultBehavior(BehaviorKind::kDynamicCutIn);
  b.params.lateral_duration = 2.0;
  const Trajectory out = SynthesizeAdversary(s, "adv", b);
  const double y0 = ForwardLaneY(2);
  const double y1 = ForwardLaneY(1);
  std::size_t start = 0;
  while (start < out.size() && out.samples[start].pose.y == y0) ++start;
  ASSERT_GT(start, 0u);
  ASSERT_LT(start + 20, out.size());
  // The ease leaves y0 at sample start - 1 and arrives 20 steps later.
  EXPECT_NEAR(out.samples[start - 1 + 10].pose.y, 0.5 * (y0 + y1), 1e-6);
  EXPECT_NEAR(out.samples[start - 1 + 20].pose.y, y1, 1e-6);
}

TEST(SynthesizeAdversary, RejectsUnknownTargetsAndPedestrians) {
  Scenario s = MakeBehaviorScenario(BehaviorKind::kDynamicCutIn, 1);
  const BehaviorSpec b = DefaultBehavior(BehaviorKind::kDynamicCutIn);
  EXPECT_THROW(SynthesizeAdversary(s, "ghost", b), SynthesisFailed);
  EXPECT_THROW(SynthesizeAdversary(s, s.ego.id, b), SynthesisFailed);
}

TEST(SynthesizeAdversary, HardBrakeAboveTargetLimitFails) {
  const Scenario s = MakeBehaviorScenario(BehaviorKind::kHardBrake, 2);
  BehaviorSpec b = DefaultBehavior(BehaviorKind::kHardBrake);
  b.params.decel = 10.0;
  EXPECT_THROW(SynthesizeAdversary(s, *SelectTarget(s, b), b), SynthesisFailed);
}

TEST(CheckFeasibility, EgoIsExemptFromClearance) {
  Scenario s = EmptyRoad();
  const Pose2 ego = s.ego.trajectory.front().pose;
  s.others.push_back(MakeVehicle(
      "adv", StraightTrajectory({ego.x + 15.0, ForwardLaneY(2), 0.0}, 8.0, s.dt, s.horizon)));
  // Driving exactly on top of the ego is not a CLEARANCE violation.
  const Trajectory on_ego = Resample(s.ego.trajectory, s.dt, s.horizon);
  FeasibilityReport r = CheckFeasibility(s, on_ego, "adv", std::nullopt);
  EXPECT_FALSE(r.Has(FeasibilityCheck::kClearance)) << r.Summary();

  // The same path against any other agent is.
  Agent clone = s.ego;
  clone.id = "clone";
  s.others.push_back(clone);
  r = CheckFeasibility(s, on_ego, "adv", std::nullopt);
  ASSERT_TRUE(r.Has(FeasibilityCheck::kClearance));
  ASSERT_EQ(r.violations.size(), 1u);
  EXPECT_NE(r.violations[0].detail.find("'clone'"), std::string::npos);
  EXPECT_EQ(r.violations[0].step, 0u);
}

TEST(CheckFeasibility, FlagsDrivableAndKinematicViolations) {
  Scenario s = EmptyRoad();
  s.others.push_back(
      MakeVehicle("adv", StraightTrajectory({0.0, ForwardLaneY(2), 0.0}, 8.0, s.dt, s.horizon)));
  Trajectory off = Resample(s.others[0].trajectory, s.dt, s.horizon);
  for (auto& smp : off.samples) smp.pose.y += 40.0;
  FeasibilityReport r = CheckFeasibility(s, off, "adv", std::nullopt);
  EXPECT_TRUE(r.Has(FeasibilityCheck::kDrivable));
  EXPECT_FALSE(r.Has(FeasibilityCheck::kKinematic));

  Trajectory jumpy = Resample(s.others[0].trajectory, s.dt, s.horizon);
  for (std::size_t k = 0; k < jumpy.size(); ++k) jumpy.samples[k].pose.x = 3.0 * k;
  r = CheckFeasibility(s, jumpy, "adv", std::nullopt);
  EXPECT_TRUE(r.Has(FeasibilityCheck::kKinematic));
  EXPECT_FALSE(r.feasible());
  EXPECT_FALSE(r.Summary().empty());
}

TEST(CheckFeasibility, OffGridCandidateIsRejected) {
  Scenario s = MakeBehaviorScenario(BehaviorKind::kDynamicCutIn, 3);
  Trajectory t = Resample(s.others[0].trajectory, s.dt, s.horizon);
  t.samples.pop_back();
  EXPECT_THROW(CheckFeasibility(s, t, s.others[0].id, std::nullopt), GridMismatch);
  t = Resample(s.others[0].trajectory, s.dt, s.horizon);
  t.samples[4].t += 0.01;
  EXPECT_THROW(CheckFeasibility(s, t, s.others[0].id, std::nullopt), GridMismatch);
}

Trajectory CurvedPath() {
  Trajectory traj;
  Pose2 p{0.0, 0.0, 0.2};
  for (int k = 0; k <= 80; ++k) {
    traj.samples.push_back({0.1 * k, p, 9.0});
    p = Compose(p, {0.9, 0.0, 0.01});
  }
  return traj;
}

TEST(Perturb, UnitFactorIsTheIdentityOnGrid) {
  const Trajectory traj = CurvedPath();
  const Trajectory out = PerturbWithFactor(traj, 1.0, 0.1, 8.0);
  ASSERT_EQ(out.size(), traj.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    EXPECT_NEAR(Distance(out.samples[k].pose.position(), traj.samples[k].pose.position()), 0.0,
                1e-9);
  }
}

TEST(Perturb, ReplaysThePathAtScaledTime) {
  const Trajectory traj = CurvedPath();
  for (double f : {0.8, 0.93, 1.1, 1.2}) {
    const Trajectory out = PerturbWithFactor(traj, f, 0.1, 8.0);
    const auto grid = GridTimes(0.1, 8.0);
    ASSERT_EQ(out.size(), grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
      EXPECT_NEAR(out.samples[k].t, grid[k], kTimeTolerance);
      const Vec2 expected = traj.At(std::min(f * grid[k], traj.back().t)).pose.position();
      EXPECT_NEAR(Distance(out.samples[k].pose.position(), expected), 0.0, 1e-9) << f;
    }
  }
}

TEST(Perturb, OutputStaysOnTheOriginalPath) {
  const Trajectory traj = CurvedPath();
  std::vector<Vec2> pts;
  for (const auto& smp : traj.samples) pts.push_back(smp.pose.position());
  const Polyline path(pts);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Trajectory out = Perturb(traj, seed, {}, 0.1, 8.0, 3.6);
    for (const auto& smp : out.samples) {
      EXPECT_LT(std::abs(path.Project(smp.pose.position()).lateral), 1e-9);
    }
  }
}

TEST(Perturb, StopCapBrakesWithinTheLimit) {
  const Trajectory traj = CurvedPath();
  std::vector<Vec2> pts;
  for (const auto& smp : traj.samples) pts.push_back(smp.pose.position());
  const Polyline path(pts);
  const double decel = 3.6;
  for (double f : {1.05, 1.2, 1.5}) {
    const Trajectory out = PerturbWithFactor(traj, f, 0.1, 8.0, decel);
    double prev_s = 0.0;
    for (const auto& smp : out.samples) {
      const double s = path.Project(smp.pose.position()).s;
      EXPECT_GE(s, prev_s - 1e-9);
      EXPECT_LE(s, path.Length() + 1e-9);
      prev_s = s;
    }
    std::vector<double> speeds;
    for (std::size_t k = 1; k < out.size(); ++k) {
      speeds.push_back(
          Distance(out.samples[k].pose.position(), out.samples[k - 1].pose.position()) / 0.1);
    }
    for (std::size_t k = 1; k < speeds.size(); ++k) {
      EXPECT_LE(speeds[k - 1] - speeds[k], decel * 0.1 * (1.0 + 1e-3)) << f << " step " << k;
    }
    // Whatever speed is left can still be shed before the path ends.
    const double v_end = speeds.back();
    EXPECT_LE(v_end * v_end, 2.0 * decel * (path.Length() - prev_s) + decel * 0.1 * v_end + 1e-6);
  }
}

TEST(Perturb, SeededAndBounded) {
  const SpeedScaleBounds bounds{0.8, 1.2};
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const double f = DrawSpeedScale(seed, bounds);
    EXPECT_GE(f, 0.8);
    EXPECT_LE(f, 1.2);
    EXPECT_EQ(f, DrawSpeedScale(seed, bounds));
  }
  EXPECT_NE(DrawSpeedScale(1, bounds), DrawSpeedScale(2, bounds));
  EXPECT_THROW(DrawSpeedScale(0, {1.2, 0.8}), InvalidArgument);
  EXPECT_THROW(DrawSpeedScale(0, {0.0, 1.0}), InvalidArgument);
  const Trajectory traj = CurvedPath();
  EXPECT_EQ(Perturb(traj, 5, bounds, 0.1, 8.0), Perturb(traj, 5, bounds, 0.1, 8.0));
}

TEST(QuinticEase, EndpointsAndSymmetry) {
  EXPECT_EQ(QuinticEase(0.0), 0.0);
  EXPECT_EQ(QuinticEase(1.0), 1.0);
  EXPECT_EQ(QuinticEase(0.5), 0.5);
  EXPECT_EQ(QuinticEase(-3.0), 0.0);
  EXPECT_EQ(QuinticEase(4.0), 1.0);
  for (double u = 0.0; u <= 1.0; u += 0.01) {
    EXPECT_NEAR(QuinticEase(u) + QuinticEase(1.0 - u), 1.0, 1e-12);
  }
}

TEST(RunAdversaryPipeline, StatusesAndDeterminism) {
  const BehaviorSpec b = DefaultBehavior(BehaviorKind::kDynamicCutIn);
  const AdversaryOutcome none = RunAdversaryPipeline(EmptyRoad(), b, {});
  EXPECT_EQ(none.status, AdversaryStatus::kNoCandidate);

  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Scenario s = MakeBehaviorScenario(BehaviorKind::kDynamicCutIn, seed);
    const AdversaryOptions opts{0.5, {}, seed};
    const AdversaryOutcome a = RunAdversaryPipeline(s, b, opts);
    const AdversaryOutcome c = RunAdversaryPipeline(s, b, opts);
    EXPECT_EQ(a.status, c.status);
    EXPECT_EQ(a.trajectory, c.trajectory);
    EXPECT_EQ(a.speed_scale, c.speed_scale);
    if (a.status == AdversaryStatus::kInjected) {
      EXPECT_TRUE(a.report.feasible());
      if (!a.perturbed) {
        EXPECT_EQ(a.trajectory, a.unperturbed);
      }
      EXPECT_EQ(a.perturbed, a.speed_scale != 1.0);
    }
  }
  const Scenario s = MakeBehaviorScenario(BehaviorKind::kDynamicCutIn, 0);
  const AdversaryOutcome never = RunAdversaryPipeline(s, b, {0.0, {}, 3});
  EXPECT_FALSE(never.perturbed);
}

TEST(InjectAdversary, ReplacesOnlyTheTarget) {
  const Scenario s = MakeBehaviorScenario(BehaviorKind::kDynamicCutIn, 4);
  const BehaviorSpec b = DefaultBehavior(BehaviorKind::kDynamicCutIn);
  const std::string target = *SelectTarget(s, b);
  const Trajectory traj = SynthesizeAdversary(s, target, b);
  const Scenario edited = InjectAdversary(s, target, traj, {{"kind", "DynamicCutIn"}});
  EXPECT_TRUE(edited.IsEdited());
  EXPECT_EQ(edited.provenance->source_id, s.id);
  EXPECT_EQ(edited.provenance->params.at("kind"), "DynamicCutIn");
  EXPECT_EQ(edited.ego, s.ego);
  ASSERT_EQ(edited.others.size(), s.others.size());
  for (std::size_t i = 0; i < s.others.size(); ++i) {
    if (s.others[i].id == target) {
      EXPECT_EQ(edited.others[i].trajectory, traj);
    } else {
      EXPECT_EQ(edited.others[i], s.others[i]);
    }
  }
  EXPECT_NO_THROW(ValidateScenario(edited));
}

}  // namespace
}  // namespace bevsim
