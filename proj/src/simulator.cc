#include "bevsim/simulator.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "bevsim/canonical_json.h"
#include "bevsim/ctg.h"
#include "bevsim/json_reader.h"

namespace bevsim {

using nlohmann::json;

void DeviationThresholds::Validate() const {
  if (!(position > 0.0) || !(heading > 0.0) || !std::isfinite(position) || !std::isfinite(heading)) {
    throw InvalidArgument("deviation thresholds must be positive");
  }
}

std::string_view ToString(EventKind kind) {
  switch (kind) {
    case EventKind::kDynamicCollision:
      return "DYNAMIC_COLLISION";
    case EventKind::kStaticCollision:
      return "STATIC_COLLISION";
    case EventKind::kPositionDeviation:
      return "POSITION_DEVIATION";
    case EventKind::kHeadingDeviation:
      return "HEADING_DEVIATION";
  }
  return "?";
}

std::optional<EventKind> ParseEventKind(std::string_view name) {
  for (EventKind k : {EventKind::kDynamicCollision, EventKind::kStaticCollision,
                      EventKind::kPositionDeviation, EventKind::kHeadingDeviation}) {
    if (ToString(k) == name) return k;
  }
  return std::nullopt;
}

std::string_view ToString(Termination t) {
  switch (t) {
    case Termination::kHorizon:
      return "horizon";
    case Termination::kCollision:
      return "collision";
    case Termination::kEnvelopeViolation:
      return "envelope_violation";
    case Termination::kPolicyError:
      return "policy_error";
    case Termination::kError:
      return "error";
  }
  return "?";
}

namespace {

std::optional<Termination> ParseTermination(std::string_view name) {
  for (Termination t : {Termination::kHorizon, Termination::kCollision,
                        Termination::kEnvelopeViolation, Termination::kPolicyError,
                        Termination::kError}) {
    if (ToString(t) == name) return t;
  }
  return std::nullopt;
}

struct Track {
  const Agent* agent;
  std::vector<Pose2> poses;  // one per grid instant
  std::vector<double> speeds;
};

double PolygonDistance(const Polygon& poly, const Vec2& p) {
  if (PointInPolygon(p, poly)) return 0.0;
  const auto& v = poly.vertices();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < v.size(); ++i) {
    best = std::min(best, PointSegmentDistance(p, v[i], v[(i + 1) % v.size()]));
  }
  return best;
}

}  // namespace

bool ClipResult::HasEvent(EventKind kind) const {
  return std::any_of(events.begin(), events.end(), [&](const Event& e) { return e.kind == kind; });
}

ClipResult RunClip(const Scenario& s, const Policy& policy,
                   const std::optional<AdversaryAssignment>& adversary,
                   const DeviationThresholds& thresholds, std::uint64_t seed) {
  thresholds.Validate();
  ClipResult r;
  r.scenario_id = s.id;
  r.seed = seed;
  r.edited = s.IsEdited() || adversary.has_value();

  const std::vector<double> grid = ScenarioGrid(s);
  const Trajectory expert = Resample(s.ego.trajectory, s.dt, s.horizon);
  const KinematicParams& params = *s.ego.kinematics;

  std::vector<Track> tracks;
  bool adversary_used = false;
  for (const Agent& a : s.others) {
    Track tr{&a, {}, {}};
    const Trajectory* source = &a.trajectory;
    if (adversary && adversary->target == a.id) {
      source = &adversary->trajectory;
      adversary_used = true;
      if (source->size() != grid.size()) throw GridMismatch("adversary trajectory is off the grid");
    }
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const TrajectorySample smp = source->At(grid[k]);
      tr.poses.push_back(smp.pose);
      tr.speeds.push_back(smp.v);
    }
    tracks.push_back(std::move(tr));
  }
  if (adversary && !adversary_used) throw InvalidArgument("unknown adversary '" + adversary->target + "'");
  std::sort(tracks.begin(), tracks.end(),
            [](const Track& a, const Track& b) { return a.agent->id < b.agent->id; });

  std::vector<const Lane*> lanes;
  for (const Lane& l : s.map.lanes) lanes.push_back(&l);
  std::sort(lanes.begin(), lanes.end(), [](const Lane* a, const Lane* b) { return a->id < b->id; });

  // Returns true when a collision ends the clip.
  auto detect = [&](std::size_t k, const AgentState& x) {
    const OrientedBox ego_box = s.ego.FootprintAt(x.pose);
    std::vector<std::string> dynamic_hits, static_hits;
    for (const Track& tr : tracks) {
      if (!BoxesCollide(ego_box, tr.agent->FootprintAt(tr.poses[k]))) continue;
      (tr.agent->is_static() ? static_hits : dynamic_hits).push_back(tr.agent->id);
    }
    const double t = grid[k];
    auto joined = [](const std::vector<std::string>& ids) {
      std::string out;
      for (const std::string& id : ids) out += (out.empty() ? "" : ", ") + id;
      return out;
    };
    if (!dynamic_hits.empty()) {
      r.events.push_back({t, EventKind::kDynamicCollision, dynamic_hits, "overlap with " + joined(dynamic_hits)});
    }
    if (!static_hits.empty()) {
      r.events.push_back({t, EventKind::kStaticCollision, static_hits, "overlap with " + joined(static_hits)});
    }
    const Pose2& ref = expert.samples[k].pose;
    const double pos_err = Distance(x.pose.position(), ref.position());
    if (pos_err > thresholds.position) {
      r.events.push_back({t, EventKind::kPositionDeviation, {},
                          "position error " + FormatCanonicalFloat(pos_err) + " m"});
    }
    const double head_err = std::abs(NormalizeAngle(x.pose.theta - ref.theta));
    if (head_err > thresholds.heading) {
      r.events.push_back({t, EventKind::kHeadingDeviation, {},
                          "heading error " + FormatCanonicalFloat(head_err) + " rad"});
    }
    return !dynamic_hits.empty() || !static_hits.empty();
  };

  AgentState x{expert.front().pose, expert.front().v, 0.0, grid.front()};
  r.states.push_back(x);
  r.termination = Termination::kHorizon;
  bool ended = detect(0, x);
  if (ended) r.termination = Termination::kCollision;

  Observation obs;
  obs.dt = s.dt;
  obs.ego_params = params;
  obs.ego_half_length = s.ego.half_length;
  obs.ego_half_width = s.ego.half_width;
  obs.route = &expert;
  for (std::size_t k = 0; !ended && k + 1 < grid.size(); ++k) {
    obs.t = grid[k];
    obs.step = k;
    obs.dt = grid[k + 1] - grid[k];
    obs.ego = x;
    obs.others.clear();
    for (const Track& tr : tracks) {
      if (Distance(tr.poses[k].position(), x.pose.position()) > kObservationRadius) continue;
      obs.others.push_back({tr.agent->id, tr.agent->category, tr.poses[k], tr.speeds[k],
                            tr.agent->FootprintAt(tr.poses[k])});
    }
    obs.map_view.lanes.clear();
    for (const Lane* l : lanes) {
      if (l->centerline.DistanceTo(x.pose.position()) <= kObservationRadius) obs.map_view.lanes.push_back(l);
    }
    obs.map_view.drivable.clear();
    for (const Polygon& poly : s.map.drivable) {
      if (PolygonDistance(poly, x.pose.position()) <= kObservationRadius) obs.map_view.drivable.push_back(&poly);
    }

    ControlInput u;
    try {
      u = policy.Act(obs, seed);
    } catch (const std::exception& e) {
      r.termination = Termination::kPolicyError;
      r.termination_detail = std::string("step ") + std::to_string(k) + ": " + e.what();
      break;
    }
    try {
      x = Step(x, u, obs.dt, params);
    } catch (const EnvelopeViolation& e) {
      r.termination = Termination::kEnvelopeViolation;
      r.termination_detail = e.AtStep(k).what();
      break;
    }
    x.t = grid[k + 1];
    r.states.push_back(x);
    if (detect(k + 1, x)) {
      r.termination = Termination::kCollision;
      ended = true;
    }
  }
  r.completed = r.termination == Termination::kHorizon;
  return r;
}

// ---------------------------------------------------------------------------
// Batches

namespace {

std::uint64_t SplitMix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t Fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::uint64_t ClipSeed(std::uint64_t batch_seed, std::string_view scenario_id) {
  return SplitMix64(batch_seed ^ Fnv1a64(scenario_id));
}

PreparedClip PrepareClip(const Scenario& s, const DaaConfig* daa, std::uint64_t clip_seed) {
  PreparedClip out{s, std::nullopt, std::nullopt};
  if (!daa) return out;
  AdversaryOptions options;
  options.p_perturb = daa->p_perturb;
  options.bounds = daa->bounds;
  options.seed = SplitMix64(clip_seed ^ daa->seed);
  for (const BehaviorSpec& behavior : daa->catalog) {
    const AdversaryOutcome o = RunAdversaryPipeline(s, behavior, options);
    if (o.status != AdversaryStatus::kInjected && o.status != AdversaryStatus::kInfeasible) continue;
    // An infeasible perturbation falls back to the synthesized trajectory.
    const bool perturbed = o.status == AdversaryStatus::kInjected && o.perturbed;
    const Trajectory& traj = perturbed ? o.trajectory : o.unperturbed;
    json summary{{"kind", std::string(ToString(behavior.kind))},
                 {"target", o.target},
                 {"perturbed", perturbed},
                 {"speed_scale", perturbed ? o.speed_scale : 1.0}};
    if (daa->mode == DaaMode::kImitation) {
      const Scenario edited = InjectAdversary(s, o.target, traj, summary);
      if (auto plan = PlanAvoidingEgo(edited, behavior.d_min)) {
        out.scenario.ego.trajectory = plan->trajectory;
        summary["ego_plan"] = plan->label;
      } else {
        summary["ego_plan"] = "none";
      }
    }
    out.adversary = AdversaryAssignment{o.target, traj};
    out.summary = std::move(summary);
    return out;
  }
  return out;
}

std::vector<ClipResult> RunBatch(std::span<const Scenario> scenarios, const Policy& policy,
                                 const BatchOptions& options) {
  options.thresholds.Validate();
  std::vector<ClipResult> results(scenarios.size());
  auto run_one = [&](std::size_t i) {
    const Scenario& s = scenarios[i];
    const std::uint64_t seed = ClipSeed(options.seed, s.id);
    try {
      PreparedClip prep = PrepareClip(s, options.daa ? &*options.daa : nullptr, seed);
      ClipResult clip = RunClip(prep.scenario, policy, prep.adversary, options.thresholds, seed);
      clip.adversary = std::move(prep.summary);
      results[i] = std::move(clip);
    } catch (const std::exception& e) {
      ClipResult clip;
      clip.scenario_id = s.id;
      clip.seed = seed;
      clip.completed = false;
      clip.termination = Termination::kError;
      clip.edited = s.IsEdited();
      clip.error = e.what();
      results[i] = std::move(clip);
    }
  };

  const std::size_t workers = std::max<std::size_t>(1, std::min(options.workers, scenarios.size()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < scenarios.size(); ++i) run_one(i);
    return results;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < scenarios.size(); i = next.fetch_add(1)) run_one(i);
    });
  }
  for (std::thread& t : pool) t.join();
  return results;
}

// ---------------------------------------------------------------------------
// Serialization

json ClipToJson(const ClipResult& c) {
  json events = json::array();
  for (const Event& e : c.events) {
    events.push_back({{"t", e.t}, {"kind", std::string(ToString(e.kind))}, {"agents", e.agents},
                      {"detail", e.detail}});
  }
  json states = json::array();
  for (const AgentState& x : c.states) {
    states.push_back({{"t", x.t}, {"x", x.pose.x}, {"y", x.pose.y}, {"theta", x.pose.theta},
                      {"v", x.v}, {"delta", x.delta}});
  }
  json j{{"scenario_id", c.scenario_id},
         {"seed", c.seed},
         {"completed", c.completed},
         {"termination", std::string(ToString(c.termination))},
         {"edited", c.edited},
         {"events", std::move(events)},
         {"states", std::move(states)}};
  if (!c.termination_detail.empty()) j["termination_detail"] = c.termination_detail;
  if (c.error) j["error"] = *c.error;
  if (c.adversary) j["adversary"] = *c.adversary;
  return j;
}

ClipResult ClipFromJson(const json& j) {
  ObjectReader r(j, "");
  ClipResult c;
  c.scenario_id = r.String("scenario_id");
  c.seed = r.Unsigned("seed");
  const json& completed = r.Get("completed");
  if (!completed.is_boolean()) throw SchemaError("/completed", "expected a boolean");
  c.completed = completed.get<bool>();
  const std::string term = r.String("termination");
  const auto parsed = ParseTermination(term);
  if (!parsed) throw SchemaError("/termination", "unknown termination '" + term + "'");
  c.termination = *parsed;
  c.termination_detail = r.OptionalString("termination_detail").value_or("");
  const json& edited = r.Get("edited");
  if (!edited.is_boolean()) throw SchemaError("/edited", "expected a boolean");
  c.edited = edited.get<bool>();
  c.error = r.OptionalString("error");
  if (r.Has("adversary")) c.adversary = r.Object("adversary");
  const json& events = r.Array("events");
  for (std::size_t i = 0; i < events.size(); ++i) {
    ObjectReader er(events[i], "/events/" + std::to_string(i));
    Event e;
    e.t = er.Number("t");
    const std::string kind = er.String("kind");
    const auto k = ParseEventKind(kind);
    if (!k) throw SchemaError(er.Child("kind"), "unknown event kind '" + kind + "'");
    e.kind = *k;
    for (const json& a : er.Array("agents")) {
      if (!a.is_string()) throw SchemaError(er.Child("agents"), "expected strings");
      e.agents.push_back(a.get<std::string>());
    }
    e.detail = er.String("detail");
    er.RejectUnknown();
    c.events.push_back(std::move(e));
  }
  const json& states = r.Array("states");
  for (std::size_t i = 0; i < states.size(); ++i) {
    ObjectReader sr(states[i], "/states/" + std::to_string(i));
    AgentState x;
    x.t = sr.Number("t");
    x.pose.x = sr.Number("x");
    x.pose.y = sr.Number("y");
    x.pose.theta = sr.Number("theta");
    x.v = sr.Number("v");
    x.delta = sr.Number("delta");
    sr.RejectUnknown();
    c.states.push_back(x);
  }
  r.RejectUnknown();
  return c;
}

std::string SerializeClips(std::span<const ClipResult> clips) {
  std::string out;
  for (const ClipResult& c : clips) out += DumpCanonical(ClipToJson(c)) + "\n";
  return out;
}

std::vector<ClipResult> ParseClips(std::string_view jsonl) {
  std::vector<ClipResult> out;
  std::size_t pos = 0;
  while (pos < jsonl.size()) {
    std::size_t end = jsonl.find('\n', pos);
    if (end == std::string_view::npos) end = jsonl.size();
    const std::string_view line = jsonl.substr(pos, end - pos);
    if (line.find_first_not_of(" \t\r") != std::string_view::npos) {
      out.push_back(ClipFromJson(ParseJsonText(line)));
    }
    pos = end + 1;
  }
  return out;
}

}  // namespace bevsim
