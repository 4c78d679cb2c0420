#include "commands.h"

#include <glob.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <ostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "bevsim/canonical_json.h"
#include "bevsim/ctg.h"
#include "bevsim/daa.h"
#include "bevsim/json_reader.h"
#include "bevsim/metrics.h"
#include "bevsim/render.h"
#include "bevsim/scenario.h"

namespace bevsim::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string Resolve(const std::string& path, const std::string& base_dir) {
  if (path.empty() || fs::path(path).is_absolute() || base_dir.empty()) return path;
  return (fs::path(base_dir) / path).string();
}

DaaMode ParseMode(const std::string& name, const std::string& where) {
  if (name == "rl") return DaaMode::kRl;
  if (name == "imitation") return DaaMode::kImitation;
  throw SchemaError(where, "mode must be 'rl' or 'imitation', got '" + name + "'");
}

std::vector<std::string> StringList(const json& v, const std::string& ptr) {
  std::vector<std::string> out;
  if (v.is_string()) return {v.get<std::string>()};
  if (!v.is_array()) throw SchemaError(ptr, "expected a string or an array of strings");
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_string()) throw SchemaError(ptr + "/" + std::to_string(i), "expected a string");
    out.push_back(v[i].get<std::string>());
  }
  return out;
}

DaaConfig ReadDaa(const json& j, const std::string& ptr, const std::string& base_dir) {
  ObjectReader r(j, ptr);
  DaaConfig d;
  if (auto catalog = r.OptionalString("catalog")) {
    d.catalog = LoadBehaviorCatalog(Resolve(*catalog, base_dir));
  } else {
    d.catalog = DefaultBehaviorCatalog();
  }
  if (r.Has("behaviors")) {
    std::vector<BehaviorSpec> picked;
    for (const std::string& name : StringList(r.Get("behaviors"), r.Child("behaviors"))) {
      const auto kind = ParseBehaviorKind(name);
      if (!kind) throw SchemaError(r.Child("behaviors"), "unknown behavior '" + name + "'");
      const BehaviorSpec* b = FindBehavior(d.catalog, *kind);
      if (!b) throw SchemaError(r.Child("behaviors"), "'" + name + "' is not in the catalog");
      picked.push_back(*b);
    }
    d.catalog = std::move(picked);
  }
  d.p_perturb = r.OptionalNumber("p_perturb").value_or(d.p_perturb);
  if (!(d.p_perturb >= 0.0 && d.p_perturb <= 1.0)) {
    throw SchemaError(r.Child("p_perturb"), "must lie in [0, 1]");
  }
  if (r.Has("seed")) d.seed = r.Unsigned("seed");
  if (auto mode = r.OptionalString("mode")) d.mode = ParseMode(*mode, r.Child("mode"));
  if (r.Has("speed_scale")) {
    const json& b = r.Array("speed_scale");
    if (b.size() != 2) throw SchemaError(r.Child("speed_scale"), "expected [lo, hi]");
    d.bounds.lo = AsNumber(b[0], r.Child("speed_scale") + "/0");
    d.bounds.hi = AsNumber(b[1], r.Child("speed_scale") + "/1");
    if (!(d.bounds.lo > 0.0 && d.bounds.lo <= d.bounds.hi)) {
      throw SchemaError(r.Child("speed_scale"), "need 0 < lo <= hi");
    }
  }
  r.RejectUnknown();
  return d;
}

}  // namespace

RunConfig ParseRunConfig(std::string_view text, const std::string& base_dir) {
  const json doc = ParseJsonText(text);
  if (!doc.is_object()) throw SchemaError("", "config must be a JSON object");
  ObjectReader r(doc, "");
  RunConfig c;
  if (r.Has("scenarios")) {
    for (const std::string& p : StringList(r.Get("scenarios"), r.Child("scenarios"))) {
      c.scenarios.push_back(Resolve(p, base_dir));
    }
  }
  if (r.Has("policy")) {
    ObjectReader p(r.Object("policy"), r.Child("policy"));
    c.policy = p.String("name");
    if (p.Has("params")) c.policy_params = p.Object("params");
    p.RejectUnknown();
  }
  if (r.Has("daa") && !r.Get("daa").is_null()) {
    c.daa = ReadDaa(r.Object("daa"), r.Child("daa"), base_dir);
  }
  if (r.Has("thresholds")) {
    ObjectReader t(r.Object("thresholds"), r.Child("thresholds"));
    c.thresholds.position = t.OptionalNumber("position").value_or(c.thresholds.position);
    c.thresholds.heading = t.OptionalNumber("heading").value_or(c.thresholds.heading);
    t.RejectUnknown();
    try {
      c.thresholds.Validate();
    } catch (const InvalidArgument& e) {
      throw SchemaError(r.Child("thresholds"), e.what());
    }
  }
  if (auto out = r.OptionalString("output_dir")) c.output_dir = Resolve(*out, base_dir);
  if (r.Has("workers")) {
    c.workers = r.Unsigned("workers");
    if (c.workers == 0) throw SchemaError(r.Child("workers"), "must be at least 1");
  }
  if (r.Has("seed")) c.seed = r.Unsigned("seed");
  if (r.Has("kinematics")) {
    const json& table = r.Object("kinematics");
    for (const auto& [name, params] : table.items()) {
      const std::string ptr = r.Child("kinematics") + "/" + name;
      const auto category = ParseAgentCategory(name);
      if (!category || !IsVehicle(*category)) {
        throw SchemaError(ptr, "not a vehicle category");
      }
      KinematicParams k = KinematicsFromJson(params, ptr);
      try {
        k.Validate();
      } catch (const InvalidArgument& e) {
        throw SchemaError(ptr, e.what());
      }
      c.kinematics[*category] = k;
    }
  }
  r.RejectUnknown();
  return c;
}

std::vector<std::string> ExpandPatterns(const std::vector<std::string>& patterns) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const std::string& pattern : patterns) {
    glob_t g{};
    const int rc = glob(pattern.c_str(), 0, nullptr, &g);
    std::vector<std::string> matches;
    if (rc == 0) {
      for (std::size_t i = 0; i < g.gl_pathc; ++i) matches.emplace_back(g.gl_pathv[i]);
    }
    globfree(&g);
    if (rc == GLOB_NOMATCH) throw Error("no file matches '" + pattern + "'");
    if (rc != 0) throw Error("cannot expand '" + pattern + "'");
    std::sort(matches.begin(), matches.end());
    for (std::string& m : matches) {
      if (seen.insert(m).second) out.push_back(std::move(m));
    }
  }
  return out;
}

namespace {

// ---- validate -------------------------------------------------------------

int CmdValidate(const std::vector<std::string>& paths, std::ostream& out) {
  int failures = 0;
  for (const std::string& path : paths) {
    try {
      LoadScenario(path);
      out << "ok\t" << path << "\n";
    } catch (const std::exception& e) {
      ++failures;
      out << "FAIL\t" << path << "\t" << e.what() << "\n";
    }
  }
  return failures ? kExitError : kExitOk;
}

// ---- adversary ------------------------------------------------------------

struct AdversaryArgs {
  std::string scenario;
  std::string behavior;
  std::string catalog;
  std::string output;
  std::string mode = "rl";
  std::uint64_t seed = 0;
  double p_perturb = 0.5;
};

int CmdAdversary(const AdversaryArgs& a, std::ostream& out, std::ostream& err) {
  const DaaMode mode = ParseMode(a.mode, "--mode");
  const auto kind = ParseBehaviorKind(a.behavior);
  if (!kind) throw Error("unknown behavior '" + a.behavior + "'");
  BehaviorSpec behavior = DefaultBehavior(*kind);
  if (!a.catalog.empty()) {
    const auto catalog = LoadBehaviorCatalog(a.catalog);
    const BehaviorSpec* b = FindBehavior(catalog, *kind);
    if (!b) throw Error(a.behavior + " is not in " + a.catalog);
    behavior = *b;
  }
  const Scenario s = LoadScenario(a.scenario);

  const AdversaryOutcome o = RunAdversaryPipeline(s, behavior, {a.p_perturb, {}, a.seed});
  switch (o.status) {
    case AdversaryStatus::kNoCandidate:
    case AdversaryStatus::kSynthesisFailed:
      err << ToString(o.status) << ": " << o.reason << "\n";
      return kExitNotApplicable;
    case AdversaryStatus::kInfeasible: {
      json j{{"status", ToString(o.status)}, {"target", o.target}, {"perturbed", o.perturbed},
             {"speed_scale", o.speed_scale}, {"report", o.report.ToJson()}};
      out << DumpCanonical(j, 2) << "\n";
      err << "infeasible: " << o.report.Summary() << "\n";
      return kExitInfeasible;
    }
    case AdversaryStatus::kInjected:
      break;
  }

  json params{{"kind", ToString(*kind)},
              {"perturbed", o.perturbed},
              {"speed_scale", o.speed_scale},
              {"seed", a.seed},
              {"mode", a.mode}};
  Scenario edited = InjectAdversary(s, o.target, o.trajectory, params);
  json summary{{"status", "injected"}, {"target", o.target}, {"kind", ToString(*kind)},
               {"perturbed", o.perturbed}, {"speed_scale", o.speed_scale}, {"output", a.output}};
  if (mode == DaaMode::kImitation) {
    const auto plan = PlanAvoidingEgo(edited, behavior.d_min);
    const std::string label = plan ? plan->label : "none";
    if (plan) {
      edited.ego.trajectory = plan->trajectory;
    } else {
      err << "warning: no clearing ego trajectory found, keeping the expert\n";
    }
    edited.provenance->params["ego_plan"] = label;
    summary["ego_plan"] = label;
  }
  SaveScenario(edited, a.output);
  out << DumpCanonical(summary) << "\n";
  return kExitOk;
}

// ---- augment --------------------------------------------------------------

struct AugmentArgs {
  std::vector<std::string> paths;
  std::string mode = "interpolate";
  int m = 1;
  std::vector<std::string> extensions;
  std::optional<double> t_start;
  std::optional<double> t_end;
  double d_min = 1.0;
  std::string out_dir;
  bool stats = false;
};

// KIND or KIND:VALUE where VALUE is the LaneShift offset or SharpTurn radius.
ExtensionSpec ParseExtensionArg(const std::string& text) {
  const auto colon = text.find(':');
  const std::string name = text.substr(0, colon);
  const auto kind = ParseExtensionKind(name);
  if (!kind) throw Error("unknown extension '" + name + "'");
  ExtensionSpec spec;
  spec.kind = *kind;
  if (colon != std::string::npos) {
    const std::string value = text.substr(colon + 1);
    double v = 0.0;
    try {
      std::size_t used = 0;
      v = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
    } catch (const std::exception&) {
      throw Error("bad value in extension '" + text + "'");
    }
    if (*kind == ExtensionKind::kLaneShift) {
      spec.offset = v;
    } else if (*kind == ExtensionKind::kSharpTurn) {
      spec.radius = v;
    } else {
      throw Error(name + " takes no value");
    }
  } else if (*kind == ExtensionKind::kLaneShift) {
    throw Error("LaneShift needs an offset, e.g. LaneShift:1.5");
  }
  return spec;
}

std::vector<ExtensionSpec> ExtensionsFor(const AugmentArgs& a, const Scenario& s) {
  std::vector<ExtensionSpec> specs;
  if (a.extensions.empty()) {
    specs = DefaultExtensionSet(s.horizon);
  } else {
    for (const std::string& e : a.extensions) specs.push_back(ParseExtensionArg(e));
  }
  for (ExtensionSpec& spec : specs) {
    if (a.t_start) spec.t_start = *a.t_start;
    if (a.t_end) spec.t_end = std::min(*a.t_end, s.horizon);
  }
  return specs;
}

std::string HistogramText(const ActionHistogram& h) {
  std::ostringstream os;
  for (ActionClass c : kAllActionClasses) {
    std::string name(ToString(c));
    name.resize(12, ' ');
    os << name << h.Count(c) << "\n";
  }
  os << "total       " << h.total << "\n";
  return os.str();
}

int CmdAugment(const AugmentArgs& a, std::ostream& out, std::ostream& err) {
  if (a.mode != "interpolate" && a.mode != "extend") {
    throw Error("--mode must be 'interpolate' or 'extend'");
  }
  const InterpolationConfig interp{a.m};
  interp.Validate();
  for (const std::string& e : a.extensions) ParseExtensionArg(e);  // fail before any work
  fs::create_directories(a.out_dir);

  std::vector<Scenario> inputs;
  std::vector<Scenario> cousins;
  bool had_error = false;
  for (const std::string& path : a.paths) {
    Scenario s;
    try {
      s = LoadScenario(path);
    } catch (const std::exception& e) {
      had_error = true;
      err << "error: " << path << ": " << e.what() << "\n";
      continue;
    }
    std::vector<Scenario> made;
    if (a.mode == "interpolate") {
      made.push_back(AdjustNeighbors(s, interp));
    } else {
      for (const ExtensionSpec& spec : ExtensionsFor(a, s)) {
        try {
          made.push_back(ApplyExtension(s, spec, a.d_min));
        } catch (const Error& e) {
          err << "skip " << s.id << " " << spec.Label() << ": " << e.what() << "\n";
        }
      }
    }
    for (Scenario& c : made) {
      const std::string file = (fs::path(a.out_dir) / (c.id + ".json")).string();
      SaveScenario(c, file);
      if (!a.stats) out << file << "\n";
      cousins.push_back(std::move(c));
    }
    inputs.push_back(std::move(s));
  }

  if (a.stats) {
    const ActionHistogram before = DatasetStats(inputs);
    std::vector<Scenario> all = inputs;
    all.insert(all.end(), cousins.begin(), cousins.end());
    const ActionHistogram after = DatasetStats(all);
    out << DumpCanonical(json{{"before", before.ToJson()}, {"after", after.ToJson()}}, 2) << "\n";
  }
  return had_error ? kExitError : kExitOk;
}

// ---- evaluate -------------------------------------------------------------

struct EvaluateArgs {
  std::string config;
  std::vector<std::string> scenarios;
  std::string policy;
  std::string policy_params;
  std::string output_dir;
  std::optional<std::size_t> workers;
  std::optional<std::uint64_t> seed;
  std::string catalog;
  std::optional<double> p_perturb;
  std::string mode;
  bool no_daa = false;
};

RunConfig ResolveRunConfig(const EvaluateArgs& a) {
  std::string path = a.config;
  if (path.empty()) {
    if (const char* env = std::getenv(kConfigEnvVar)) path = env;
  }
  RunConfig c;
  if (!path.empty()) c = ParseRunConfig(ReadFile(path), fs::path(path).parent_path().string());

  if (!a.scenarios.empty()) c.scenarios = a.scenarios;
  if (!a.policy.empty()) {
    c.policy = a.policy;
    c.policy_params = json::object();
  }
  if (!a.policy_params.empty()) c.policy_params = ParseJsonText(a.policy_params);
  if (!a.output_dir.empty()) c.output_dir = a.output_dir;
  if (a.workers) {
    if (*a.workers == 0) throw Error("--workers must be at least 1");
    c.workers = *a.workers;
  }
  if (a.seed) c.seed = *a.seed;
  const bool wants_daa = !a.catalog.empty() || a.p_perturb || !a.mode.empty();
  if (wants_daa && !c.daa) {
    c.daa.emplace();
    c.daa->catalog = DefaultBehaviorCatalog();
  }
  if (!a.catalog.empty()) c.daa->catalog = LoadBehaviorCatalog(a.catalog);
  if (a.p_perturb) {
    if (!(*a.p_perturb >= 0.0 && *a.p_perturb <= 1.0)) throw Error("--p-perturb must lie in [0, 1]");
    c.daa->p_perturb = *a.p_perturb;
  }
  if (!a.mode.empty()) c.daa->mode = ParseMode(a.mode, "--mode");
  if (a.no_daa) c.daa.reset();
  if (c.scenarios.empty()) throw Error("no scenarios given (config 'scenarios' or --scenarios)");
  return c;
}

int CmdEvaluate(const EvaluateArgs& a, std::ostream& out, std::ostream& err) {
  const RunConfig c = ResolveRunConfig(a);
  const auto policy = MakePolicy(c.policy, c.policy_params);
  const std::vector<std::string> paths = ExpandPatterns(c.scenarios);

  // Load failures become error clips in input order.
  std::vector<Scenario> loaded;
  std::vector<std::optional<ClipResult>> slots(paths.size());
  std::vector<std::size_t> slot_of_loaded;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    try {
      Scenario s = LoadScenario(paths[i]);
      auto apply = [&](Agent& agent) {
        auto it = c.kinematics.find(agent.category);
        if (it != c.kinematics.end()) agent.kinematics = it->second;
      };
      apply(s.ego);
      for (Agent& other : s.others) apply(other);
      ValidateScenario(s);
      loaded.push_back(std::move(s));
      slot_of_loaded.push_back(i);
    } catch (const std::exception& e) {
      ClipResult r;
      r.scenario_id = paths[i];
      r.seed = ClipSeed(c.seed, paths[i]);
      r.termination = Termination::kError;
      r.error = e.what();
      slots[i] = std::move(r);
      err << "error: " << paths[i] << ": " << e.what() << "\n";
    }
  }

  BatchOptions options;
  options.daa = c.daa;
  options.thresholds = c.thresholds;
  options.seed = c.seed;
  options.workers = c.workers;
  std::vector<ClipResult> ran = RunBatch(loaded, *policy, options);
  for (std::size_t k = 0; k < ran.size(); ++k) slots[slot_of_loaded[k]] = std::move(ran[k]);
  std::vector<ClipResult> clips;
  for (auto& slot : slots) clips.push_back(std::move(*slot));

  fs::create_directories(c.output_dir);
  const fs::path dir(c.output_dir);
  WriteFile((dir / "clips.jsonl").string(), SerializeClips(clips));
  MetricReport report;
  try {
    report = Aggregate(clips, c.thresholds);
  } catch (const EmptyInput& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
  WriteFile((dir / "report.json").string(), DumpCanonical(report.ToJson(), 2) + "\n");
  const std::string text = ReportToText(report);
  WriteFile((dir / "report.txt").string(), text);
  out << text;
  return kExitOk;
}

// ---- render ---------------------------------------------------------------

struct RenderArgs {
  std::string scenario;
  std::optional<double> t;
  bool all = false;
  std::string clip_file;
  std::string clip_id;
  std::string output;
};

int CmdRender(const RenderArgs& a, std::ostream& out) {
  if (a.t && a.all) throw Error("--t and --all are exclusive");
  const Scenario s = LoadScenario(a.scenario);
  std::optional<ClipResult> clip;
  if (!a.clip_file.empty()) {
    const std::string want = a.clip_id.empty() ? s.id : a.clip_id;
    for (ClipResult& c : ParseClips(ReadFile(a.clip_file))) {
      if (c.scenario_id == want) {
        clip = std::move(c);
        break;
      }
    }
    if (!clip) throw Error("no clip '" + want + "' in " + a.clip_file);
  }
  const std::optional<double> when = a.all ? std::nullopt : std::optional<double>(a.t.value_or(0.0));
  const std::string svg = RenderSvg(s, when, clip ? &*clip : nullptr);
  if (a.output.empty()) {
    out << svg;
  } else {
    WriteFile(a.output, svg);
  }
  return kExitOk;
}

// ---- stats ----------------------------------------------------------------

struct StatsArgs {
  std::vector<std::string> scenarios;
  std::vector<std::string> clips;
  std::string format = "text";
  double position = DeviationThresholds{}.position;
  double heading = DeviationThresholds{}.heading;
};

int CmdStats(const StatsArgs& a, std::ostream& out) {
  if (a.format != "text" && a.format != "csv" && a.format != "json") {
    throw Error("--format must be text, csv or json");
  }
  if (a.scenarios.empty() == a.clips.empty()) {
    throw Error("give either scenario files or --clips files");
  }
  if (!a.scenarios.empty()) {
    std::vector<Scenario> scenarios;
    for (const std::string& p : a.scenarios) scenarios.push_back(LoadScenario(p));
    const ActionHistogram h = DatasetStats(scenarios);
    if (a.format == "json") {
      out << DumpCanonical(h.ToJson(), 2) << "\n";
    } else if (a.format == "csv") {
      out << "action,count\n";
      for (ActionClass c : kAllActionClasses) out << ToString(c) << "," << h.Count(c) << "\n";
    } else {
      out << HistogramText(h);
    }
    return kExitOk;
  }

  const DeviationThresholds thresholds{a.position, a.heading};
  thresholds.Validate();
  std::set<std::string> stems;
  for (const std::string& p : a.clips) stems.insert(fs::path(p).stem().string());
  const bool use_stems = stems.size() == a.clips.size();
  std::vector<NamedReport> reports;
  for (const std::string& p : a.clips) {
    const auto clips = ParseClips(ReadFile(p));
    reports.push_back({use_stems ? fs::path(p).stem().string() : p, Aggregate(clips, thresholds)});
  }
  const ComparisonTable table = Compare(reports);
  if (a.format == "json") {
    out << DumpCanonical(table.ToJson(), 2) << "\n";
  } else if (a.format == "csv") {
    out << table.ToCsv();
  } else {
    out << table.ToText();
  }
  return kExitOk;
}

}  // namespace

int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Closed-loop BEV scenario evaluation and augmentation"};
  app.name(args.empty() ? "bevsim" : fs::path(args[0]).filename().string());
  app.require_subcommand(1, 1);

  std::vector<std::string> validate_paths;
  CLI::App* validate = app.add_subcommand("validate", "Check scenario files against the schema");
  validate->add_option("paths", validate_paths, "Scenario files")->required();

  AdversaryArgs adv;
  CLI::App* adversary = app.add_subcommand("adversary", "Inject a behavior-conditioned adversary");
  adversary->add_option("scenario", adv.scenario, "Scenario file")->required();
  adversary->add_option("--behavior", adv.behavior, "Behavior kind, e.g. DynamicCutIn")->required();
  adversary->add_option("--catalog", adv.catalog, "Behavior catalog (default: built-in)");
  adversary->add_option("--seed", adv.seed, "Perturbation seed");
  adversary->add_option("--p-perturb", adv.p_perturb, "Probability of the speed perturbation")
      ->check(CLI::Range(0.0, 1.0));
  adversary->add_option("--mode", adv.mode, "rl | imitation");
  adversary->add_option("-o,--output", adv.output, "Edited scenario path")->required();

  AugmentArgs aug;
  CLI::App* augment = app.add_subcommand("augment", "Densify or extend ego trajectories");
  augment->add_option("paths", aug.paths, "Scenario files")->required();
  augment->add_option("--mode", aug.mode, "interpolate | extend");
  augment->add_option("--m", aug.m, "Points inserted per interval (interpolate)");
  augment->add_option("--extension", aug.extensions,
                      "LaneChangeLeft | LaneChangeRight | LaneShift:OFFSET | SharpTurn:RADIUS");
  augment->add_option("--t-start", aug.t_start, "Extension window start [s]");
  augment->add_option("--t-end", aug.t_end, "Extension window end [s]");
  augment->add_option("--d-min", aug.d_min, "Clearance for extension feasibility [m]");
  augment->add_option("--out", aug.out_dir, "Output directory")->required();
  augment->add_flag("--stats", aug.stats, "Print action histograms before and after");

  EvaluateArgs ev;
  CLI::App* evaluate = app.add_subcommand("evaluate", "Closed-loop batch evaluation");
  evaluate->add_option("config", ev.config, std::string("Run config (default: $") + kConfigEnvVar + ")");
  evaluate->add_option("--scenarios", ev.scenarios, "Scenario paths or glob patterns");
  evaluate->add_option("--policy", ev.policy, "expert_replay | constant_control | lane_follow_idm");
  evaluate->add_option("--policy-params", ev.policy_params, "Policy parameters as JSON");
  evaluate->add_option("--out", ev.output_dir, "Output directory");
  evaluate->add_option("--workers", ev.workers, "Worker threads");
  evaluate->add_option("--seed", ev.seed, "Batch seed");
  evaluate->add_option("--catalog", ev.catalog, "Enable adversaries from this catalog");
  evaluate->add_option("--p-perturb", ev.p_perturb, "Adversary speed-perturbation probability");
  evaluate->add_option("--mode", ev.mode, "rl | imitation");
  evaluate->add_flag("--no-daa", ev.no_daa, "Disable adversary injection");

  RenderArgs rn;
  CLI::App* render = app.add_subcommand("render", "Write a BEV SVG");
  render->add_option("scenario", rn.scenario, "Scenario file")->required();
  render->add_option("--t", rn.t, "Instant to draw [s] (default 0)");
  render->add_flag("--all", rn.all, "Draw every grid step");
  render->add_option("--clip", rn.clip_file, "clips.jsonl holding the simulated ego");
  render->add_option("--clip-id", rn.clip_id, "Clip scenario id (default: the scenario id)");
  render->add_option("-o,--output", rn.output, "SVG path (default stdout)");

  StatsArgs st;
  CLI::App* stats = app.add_subcommand("stats", "Action histogram or metric comparison");
  stats->add_option("scenarios", st.scenarios, "Scenario files");
  stats->add_option("--clips", st.clips, "clips.jsonl files to compare");
  stats->add_option("--format", st.format, "text | csv | json");
  stats->add_option("--position", st.position, "Position deviation threshold [m]");
  stats->add_option("--heading", st.heading, "Heading deviation threshold [rad]");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty()) reversed.pop_back();
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (*validate) return CmdValidate(validate_paths, out);
    if (*adversary) return CmdAdversary(adv, out, err);
    if (*augment) return CmdAugment(aug, out, err);
    if (*evaluate) return CmdEvaluate(ev, out, err);
    if (*render) return CmdRender(rn, out);
    if (*stats) return CmdStats(st, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}

}  // namespace bevsim::cli
