#pragma once

#include <optional>
#include <string>

#include "bevsim/scenario.h"
#include "bevsim/simulator.h"

namespace bevsim {

struct RenderOptions {
  double pixels_per_meter = 4.0;
  double margin = 5.0;  // m around the content
};

// Layered BEV SVG: drivable polygons, lane centerlines, trajectories
// (expert, simulated ego when `clip` is given, adversary when the scenario
// or clip names one) and one frame group of agent boxes per rendered
// instant. `t` selects a single instant; nullopt renders every grid step.
// Every agent box carries data-id; output bytes depend only on the inputs.
std::string RenderSvg(const Scenario& s, std::optional<double> t, const ClipResult* clip = nullptr,
                      const RenderOptions& options = {});

}  // namespace bevsim
