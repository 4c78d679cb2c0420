#include "cli/commands.h"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "bevsim/canonical_json.h"
#include "bevsim/ctg.h"
#include "corpus.h"

namespace bevsim {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Output {
  int code = 0;
  std::string out;
  std::string err;
};

Output Cli(std::vector<std::string> args) {
  args.insert(args.begin(), "bevsim");
  std::ostringstream out, err;
  const int code = cli::Run(args, out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("bevsim_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string Path(const std::string& name) const { return (dir_ / name).string(); }

  std::string Save(const Scenario& s, const std::string& name) const {
    const std::string p = Path(name);
    fs::create_directories(fs::path(p).parent_path());
    SaveScenario(s, p);
    return p;
  }

  fs::path dir_;
};

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(Cli({}).code, cli::kExitError);
  EXPECT_EQ(Cli({"fly"}).code, cli::kExitError);
  EXPECT_EQ(Cli({"validate"}).code, cli::kExitError);
  const Output help = Cli({"--help"});
  EXPECT_EQ(help.code, cli::kExitOk);
  EXPECT_NE(help.out.find("evaluate"), std::string::npos);
}

TEST_F(CliTest, Validate) {
  const std::string good = Save(testing::MakeStraightScenario(1), "good.json");
  WriteFile(Path("bad.json"), "{\"schema_version\": \"1\"}");
  Output o = Cli({"validate", good});
  EXPECT_EQ(o.code, cli::kExitOk);
  EXPECT_EQ(o.out, "ok\t" + good + "\n");
  o = Cli({"validate", good, Path("bad.json"), Path("missing.json")});
  EXPECT_EQ(o.code, cli::kExitError);
  EXPECT_NE(o.out.find("FAIL\t" + Path("bad.json") + "\t"), std::string::npos);
  EXPECT_NE(o.out.find("FAIL\t" + Path("missing.json")), std::string::npos);
}

TEST_F(CliTest, AdversaryExitCodes) {
  const std::string empty =
      Save(testing::MakeStraightScenario(1, {.road = {}, .traffic = 0}), "empty.json");
  Output o = Cli({"adversary", empty, "--behavior", "DynamicCutIn", "-o", Path("x.json")});
  EXPECT_EQ(o.code, cli::kExitNotApplicable);
  EXPECT_TRUE(o.out.empty());
  EXPECT_FALSE(fs::exists(Path("x.json")));

  // First stored cut-in scenario the pipeline accepts.
  std::string cut_in;
  for (std::uint64_t seed = 0; cut_in.empty() && seed < 50; ++seed) {
    const std::string p =
        Save(testing::MakeBehaviorScenario(BehaviorKind::kDynamicCutIn, seed), "cut_in.json");
    const AdversaryOutcome r = RunAdversaryPipeline(
        LoadScenario(p), DefaultBehavior(BehaviorKind::kDynamicCutIn), {0.5, {}, 4});
    if (r.status == AdversaryStatus::kInjected) cut_in = p;
  }
  ASSERT_FALSE(cut_in.empty());
  o = Cli({"adversary", cut_in, "--behavior", "DynamicCutIn", "--seed", "4", "-o", Path("a.json")});
  ASSERT_EQ(o.code, cli::kExitOk) << o.err;
  EXPECT_EQ(Cli({"validate", Path("a.json")}).code, cli::kExitOk);
  const Scenario edited = LoadScenario(Path("a.json"));
  EXPECT_TRUE(edited.IsEdited());
  EXPECT_EQ(edited.provenance->params.at("kind"), "DynamicCutIn");
  const json summary = json::parse(o.out);
  EXPECT_EQ(summary.at("status"), "injected");

  // Same seed, same bytes.
  EXPECT_EQ(Cli({"adversary", cut_in, "--behavior", "DynamicCutIn", "--seed", "4", "-o",
                 Path("b.json")})
                .code,
            cli::kExitOk);
  EXPECT_EQ(ReadFile(Path("a.json")), ReadFile(Path("b.json")));

  EXPECT_EQ(Cli({"adversary", cut_in, "--behavior", "Teleport", "-o", Path("c.json")}).code,
            cli::kExitError);
  EXPECT_EQ(Cli({"adversary", cut_in, "--behavior", "DynamicCutIn", "--p-perturb", "2", "-o",
                 Path("c.json")})
                .code,
            cli::kExitError);
}

TEST_F(CliTest, AdversaryInfeasibleExitCode) {
  // Find a scenario whose perturbed hard brake is rejected by the checks.
  const BehaviorSpec b = DefaultBehavior(BehaviorKind::kHardBrake);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const Scenario s = testing::MakeBehaviorScenario(BehaviorKind::kHardBrake, seed);
    if (RunAdversaryPipeline(s, b, {1.0, {}, seed}).status != AdversaryStatus::kInfeasible) continue;
    const std::string path = Save(s, "hb.json");
    const Output o = Cli({"adversary", path, "--behavior", "HardBrake", "--p-perturb", "1",
                          "--seed", std::to_string(seed), "-o", Path("out.json")});
    EXPECT_EQ(o.code, cli::kExitInfeasible);
    EXPECT_EQ(json::parse(o.out).at("status"), "infeasible");
    EXPECT_FALSE(fs::exists(Path("out.json")));
    return;
  }
  FAIL() << "no infeasible case found";
}

TEST_F(CliTest, AdversaryImitationModeStoresAnAvoidingEgo) {
  const std::string path =
      Save(testing::MakeBehaviorScenario(BehaviorKind::kHardBrake, 1), "hb.json");
  const Output o = Cli({"adversary", path, "--behavior", "HardBrake", "--p-perturb", "0",
                        "--mode", "imitation", "-o", Path("im.json")});
  ASSERT_EQ(o.code, cli::kExitOk) << o.err;
  EXPECT_TRUE(json::parse(o.out).contains("ego_plan"));
}

TEST_F(CliTest, AugmentInterpolate) {
  const std::string a = Save(testing::MakeStraightScenario(1), "in/a.json");
  const Output o = Cli({"augment", a, "--mode", "interpolate", "--m", "2", "--out", Path("out")});
  ASSERT_EQ(o.code, cli::kExitOk) << o.err;
  const Scenario src = LoadScenario(a);
  const std::string written = o.out.substr(0, o.out.find('\n'));
  const Scenario dense = LoadScenario(written);
  EXPECT_EQ(dense.ego.trajectory.size(), (src.ego.trajectory.size() - 1) * 3 + 1);
  EXPECT_EQ(dense.provenance->transform, "interpolate");
  EXPECT_EQ(Cli({"augment", a, "--mode", "interpolate", "--m", "0", "--out", Path("o2")}).code,
            cli::kExitError);
}

TEST_F(CliTest, AugmentExtendStats) {
  std::vector<std::string> args{"augment"};
  for (std::uint64_t i = 0; i < 4; ++i) {
    args.push_back(Save(testing::MakeStraightScenario(i), "in/s" + std::to_string(i) + ".json"));
  }
  const std::string out_dir = Path("out");
  args.insert(args.end(), {"--mode", "extend", "--out", out_dir, "--stats"});
  const Output o = Cli(args);
  ASSERT_EQ(o.code, cli::kExitOk) << o.err;
  const json stats = json::parse(o.out);
  EXPECT_EQ(stats.at("before").at("Straight"), 4);
  EXPECT_GT(stats.at("after").at("LaneChange").get<int>(), 0);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(Path("out"))) files += e.is_regular_file();
  EXPECT_EQ(files + 4, stats.at("after").at("total").get<std::size_t>() + 0u);
}

TEST_F(CliTest, EvaluateWithConfigAndDeterminism) {
  for (std::uint64_t i = 0; i < 6; ++i) {
    Save(testing::MakeBehaviorScenario(kAllBehaviorKinds[i], i), "sc/s" + std::to_string(i) + ".json");
  }
  WriteFile(Path("run.json"), DumpCanonical(json{{"scenarios", "sc/*.json"},
                                                 {"daa", {{"p_perturb", 0.5}, {"seed", 3}}},
                                                 {"seed", 11},
                                                 {"output_dir", "out1"}},
                                            2));
  Output o = Cli({"evaluate", Path("run.json")});
  ASSERT_EQ(o.code, cli::kExitOk) << o.err;
  EXPECT_NE(o.out.find("CR"), std::string::npos);
  const std::string clips1 = ReadFile(Path("out1/clips.jsonl"));
  const std::string report1 = ReadFile(Path("out1/report.json"));
  EXPECT_TRUE(fs::exists(Path("out1/report.txt")));
  EXPECT_EQ(std::count(clips1.begin(), clips1.end(), '\n'), 6);
  EXPECT_EQ(json::parse(report1).at("n_total"), 6);

  o = Cli({"evaluate", Path("run.json"), "--workers", "4", "--out", Path("out4")});
  ASSERT_EQ(o.code, cli::kExitOk) << o.err;
  EXPECT_EQ(ReadFile(Path("out4/clips.jsonl")), clips1);
  EXPECT_EQ(ReadFile(Path("out4/report.json")), report1);

  // The environment variable supplies the config when none is given.
  ::setenv(cli::kConfigEnvVar, Path("run.json").c_str(), 1);
  o = Cli({"evaluate", "--out", Path("out_env")});
  ::unsetenv(cli::kConfigEnvVar);
  ASSERT_EQ(o.code, cli::kExitOk) << o.err;
  EXPECT_EQ(ReadFile(Path("out_env/clips.jsonl")), clips1);

  // Without adversaries the deviation metrics come back.
  o = Cli({"evaluate", Path("run.json"), "--no-daa", "--out", Path("plain")});
  ASSERT_EQ(o.code, cli::kExitOk);
  EXPECT_TRUE(json::parse(ReadFile(Path("plain/report.json"))).contains("dr"));
}

TEST_F(CliTest, EvaluateRecordsUnreadableScenarios) {
  Save(testing::MakeStraightScenario(1), "sc/a.json");
  WriteFile(Path("sc/b.json"), "not json");
  const Output o = Cli({"evaluate", "--scenarios", Path("sc/*.json"), "--out", Path("out")});
  ASSERT_EQ(o.code, cli::kExitOk) << o.err;
  EXPECT_NE(o.err.find("b.json"), std::string::npos);
  const auto clips = ParseClips(ReadFile(Path("out/clips.jsonl")));
  ASSERT_EQ(clips.size(), 2u);
  EXPECT_TRUE(clips[1].error);
  const json report = json::parse(ReadFile(Path("out/report.json")));
  EXPECT_EQ(report.at("n_total"), 1);
  EXPECT_EQ(report.at("n_failed"), 1);

  WriteFile(Path("sc/a.json"), "{}");
  EXPECT_EQ(Cli({"evaluate", "--scenarios", Path("sc/*.json"), "--out", Path("out2")}).code,
            cli::kExitError);
  EXPECT_EQ(Cli({"evaluate", "--scenarios", Path("nothing/*.json"), "--out", Path("o3")}).code,
            cli::kExitError);
  EXPECT_EQ(Cli({"evaluate", "--out", Path("o4")}).code, cli::kExitError);
}

TEST_F(CliTest, RunConfigParsing) {
  const cli::RunConfig c = cli::ParseRunConfig(
      R"({"scenarios": ["a.json", "/abs/b.json"], "policy": {"name": "lane_follow_idm",
          "params": {"desired_speed": 9}}, "thresholds": {"position": 1.5},
          "workers": 2, "kinematics": {"CAR": {"L": 3.0, "delta_max": 0.5, "v_max": 15,
          "a_max": 3.0}}})",
      "/base");
  EXPECT_EQ(c.scenarios, (std::vector<std::string>{"/base/a.json", "/abs/b.json"}));
  EXPECT_EQ(c.policy, "lane_follow_idm");
  EXPECT_EQ(c.thresholds.position, 1.5);
  EXPECT_EQ(c.thresholds.heading, DeviationThresholds{}.heading);
  EXPECT_EQ(c.workers, 2u);
  EXPECT_EQ(c.kinematics.at(AgentCategory::kCar).wheelbase, 3.0);
  EXPECT_FALSE(c.daa);
  EXPECT_THROW(cli::ParseRunConfig(R"({"workers": 0})", "."), Error);
  EXPECT_THROW(cli::ParseRunConfig(R"({"colour": "red"})", "."), SchemaError);
  EXPECT_THROW(cli::ParseRunConfig(R"({"kinematics": {"PEDESTRIAN": {}}})", "."), Error);
}

TEST_F(CliTest, RenderAndStats) {
  const std::string s = Save(testing::MakeStraightScenario(3), "s.json");
  Output o = Cli({"render", s, "--t", "1.5"});
  ASSERT_EQ(o.code, cli::kExitOk) << o.err;
  EXPECT_EQ(o.out.rfind("<svg", 0), 0u);
  EXPECT_EQ(Cli({"render", s, "--all", "-o", Path("s.svg")}).code, cli::kExitOk);
  EXPECT_TRUE(fs::exists(Path("s.svg")));

  const std::string left = Save(testing::MakeTurnScenario(1, true), "l.json");
  o = Cli({"stats", s, left, "--format", "json"});
  ASSERT_EQ(o.code, cli::kExitOk) << o.err;
  EXPECT_EQ(json::parse(o.out).at("LeftTurn"), 1);

  ASSERT_EQ(Cli({"evaluate", "--scenarios", s, left, "--out", Path("e1")}).code, cli::kExitOk);
  ASSERT_EQ(Cli({"evaluate", "--scenarios", s, left, "--policy", "constant_control",
                 "--policy-params", R"({"v": 6.0})", "--out", Path("e2")})
                .code,
            cli::kExitOk);
  o = Cli({"stats", "--clips", Path("e1/clips.jsonl"), Path("e2/clips.jsonl"), "--format", "csv"});
  ASSERT_EQ(o.code, cli::kExitOk) << o.err;
  EXPECT_EQ(o.out.substr(0, o.out.find('\n')), "method,CR,DCR,SCR,DR,PDR,HDR");
  EXPECT_EQ(std::count(o.out.begin(), o.out.end(), '\n'), 3);
  EXPECT_NE(o.out.find("\n" + Path("e1/clips.jsonl") + ","), std::string::npos);

  o = Cli({"render", s, "--clip", Path("e2/clips.jsonl"), "--t", "2"});
  EXPECT_EQ(o.code, cli::kExitOk) << o.err;
  EXPECT_EQ(Cli({"stats"}).code, cli::kExitError);
  EXPECT_EQ(Cli({"stats", s, "--clips", Path("e1/clips.jsonl")}).code, cli::kExitError);
}

}  // namespace
}  // namespace bevsim
