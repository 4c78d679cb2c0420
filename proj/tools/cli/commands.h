#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bevsim/kinematics.h"
#include "bevsim/simulator.h"
#include "json.hpp"

namespace bevsim::cli {

// Exit codes shared by all subcommands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;          // bad input, usage or I/O
inline constexpr int kExitNotApplicable = 2;  // adversary: no candidate / synthesis failed
inline constexpr int kExitInfeasible = 3;     // adversary: final trajectory infeasible

// Environment variable naming the default evaluate config.
inline constexpr const char* kConfigEnvVar = "BEVSIM_CONFIG";

// Evaluation settings. Relative paths in a config file resolve against the
// file's directory.
struct RunConfig {
  std::vector<std::string> scenarios;  // paths or glob patterns
  std::string policy = "expert_replay";
  nlohmann::json policy_params = nlohmann::json::object();
  std::optional<DaaConfig> daa;
  DeviationThresholds thresholds;
  std::string output_dir = "bevsim-out";
  std::size_t workers = 1;
  std::uint64_t seed = 0;
  // Replaces the kinematic parameters of every agent of a category.
  std::map<AgentCategory, KinematicParams> kinematics;
};

// Throws SchemaError / ValidationError / ParseError.
RunConfig ParseRunConfig(std::string_view text, const std::string& base_dir);

// Glob expansion (sorted); a pattern that matches nothing is an error.
std::vector<std::string> ExpandPatterns(const std::vector<std::string>& patterns);

// Entry point behind the `bevsim` executable. `args` includes the program
// name. Data goes to `out`, diagnostics to `err`.
int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bevsim::cli
