// Writes the sample catalog, scenarios and run config under the given directory.

#include <cstdio>
#include <filesystem>

#include "bevsim/canonical_json.h"
#include "bevsim/daa.h"
#include "corpus.h"

int main(int argc, char** argv) {
  using namespace bevsim;
  namespace fs = std::filesystem;
  if (argc != 2) {
    std::fprintf(stderr, "usage: make_samples DIR\n");
    return 2;
  }
  const fs::path dir = argv[1];
  fs::create_directories(dir / "scenarios");
  WriteFile((dir / "catalog.json").string(), SerializeBehaviorCatalog(DefaultBehaviorCatalog()));
  auto save = [&](const Scenario& s) {
    SaveScenario(s, (dir / "scenarios" / (s.id + ".json")).string());
  };
  for (int i = 0; i < 3; ++i) save(testing::MakeStraightScenario(i));
  save(testing::MakeTurnScenario(0, true));
  save(testing::MakeTurnScenario(1, false));
  for (BehaviorKind kind : kAllBehaviorKinds) save(testing::MakeBehaviorScenario(kind, 0));
  const nlohmann::json config{
      {"scenarios", "scenarios/*.json"},
      {"policy", {{"name", "lane_follow_idm"}, {"params", nlohmann::json::object()}}},
      {"daa", {{"catalog", "catalog.json"}, {"p_perturb", 0.5}, {"seed", 1}, {"mode", "rl"}}},
      {"thresholds", {{"position", 2.0}, {"heading", 0.52}}},
      {"seed", 0},
      {"workers", 2},
      {"output_dir", "out"}};
  WriteFile((dir / "run.json").string(), DumpCanonical(config, 2));
  return 0;
}
