#include "bevsim/render.h"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <sstream>

namespace bevsim {

namespace {

struct Bounds {
  double min_x = std::numeric_limits<double>::infinity();
  double min_y = std::numeric_limits<double>::infinity();
  double max_x = -std::numeric_limits<double>::infinity();
  double max_y = -std::numeric_limits<double>::infinity();

  void Add(const Vec2& p) {
    min_x = std::min(min_x, p.x);
    min_y = std::min(min_y, p.y);
    max_x = std::max(max_x, p.x);
    max_y = std::max(max_y, p.y);
  }
};

std::string Num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  std::string s = buf;
  return s == "-0.000" ? "0.000" : s;
}

std::string Escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

class Canvas {
 public:
  Canvas(const Bounds& b, const RenderOptions& o) : b_(b), scale_(o.pixels_per_meter) {}

  double Width() const { return (b_.max_x - b_.min_x) * scale_; }
  double Height() const { return (b_.max_y - b_.min_y) * scale_; }

  std::string Points(const std::vector<Vec2>& pts) const {
    std::string out;
    for (const Vec2& p : pts) {
      if (!out.empty()) out += ' ';
      out += Num((p.x - b_.min_x) * scale_) + "," + Num((b_.max_y - p.y) * scale_);
    }
    return out;
  }

 private:
  Bounds b_;
  double scale_;
};

const char* CategoryClass(AgentCategory c) {
  switch (c) {
    case AgentCategory::kCar:
      return "car";
    case AgentCategory::kTruck:
      return "truck";
    case AgentCategory::kBus:
      return "bus";
    case AgentCategory::kPedestrian:
      return "pedestrian";
    case AgentCategory::kStaticObstacle:
      return "static";
  }
  return "agent";
}

std::vector<Vec2> BoxPoints(const OrientedBox& box) {
  const auto c = box.Corners();
  return {c.begin(), c.end()};
}

std::optional<std::string> AdversaryId(const Scenario& s, const ClipResult* clip) {
  if (clip && clip->adversary && clip->adversary->contains("target")) {
    return (*clip->adversary)["target"].get<std::string>();
  }
  if (s.IsEdited() && s.provenance->params.contains("target") &&
      s.provenance->params["target"].is_string()) {
    return s.provenance->params["target"].get<std::string>();
  }
  return std::nullopt;
}

// Ego pose at t from the simulated states (held after the clip ended), or
// the expert when no clip is given.
Pose2 EgoPoseAt(const Scenario& s, const ClipResult* clip, double t) {
  if (!clip || clip->states.empty()) return s.ego.trajectory.At(t).pose;
  const AgentState* best = &clip->states.front();
  for (const AgentState& x : clip->states) {
    if (x.t <= t + kTimeTolerance) best = &x;
  }
  return best->pose;
}

}  // namespace

std::string RenderSvg(const Scenario& s, std::optional<double> t, const ClipResult* clip,
                      const RenderOptions& options) {
  if (!(options.pixels_per_meter > 0.0) || !(options.margin >= 0.0)) {
    throw InvalidArgument("render scale must be positive and margin non-negative");
  }
  std::vector<double> instants = t ? std::vector<double>{*t} : ScenarioGrid(s);

  Bounds b;
  for (const Polygon& poly : s.map.drivable) {
    for (const Vec2& p : poly.vertices()) b.Add(p);
  }
  for (const Lane& lane : s.map.lanes) {
    for (const Vec2& p : lane.centerline.points()) b.Add(p);
  }
  for (const TrajectorySample& smp : s.ego.trajectory.samples) b.Add(smp.pose.position());
  for (const Agent& a : s.others) {
    for (const TrajectorySample& smp : a.trajectory.samples) b.Add(smp.pose.position());
  }
  if (clip) {
    for (const AgentState& x : clip->states) b.Add(x.pose.position());
  }
  b.min_x -= options.margin;
  b.min_y -= options.margin;
  b.max_x += options.margin;
  b.max_y += options.margin;
  const Canvas canvas(b, options);

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << Num(canvas.Width()) << "\" height=\""
     << Num(canvas.Height()) << "\" data-scenario=\"" << Escape(s.id) << "\">\n";
  os << "<style>.drivable{fill:#e8e8e8;stroke:#999}.lane{fill:none;stroke:#bbb;stroke-dasharray:4 4}"
        ".expert{fill:none;stroke:#2a7;stroke-width:1.5}.ego-path{fill:none;stroke:#27c;stroke-width:1.5}"
        ".adversary-path{fill:none;stroke:#d33;stroke-width:1.5}.agent{fill:#888;stroke:#333}"
        ".ego{fill:#27c}.adversary{fill:#d33}.static{fill:#555}</style>\n";

  os << "<g id=\"drivable\">\n";
  for (const Polygon& poly : s.map.drivable) {
    os << "<polygon class=\"drivable\" points=\"" << canvas.Points(poly.vertices()) << "\"/>\n";
  }
  os << "</g>\n<g id=\"lanes\">\n";
  for (const Lane& lane : s.map.lanes) {
    os << "<polyline class=\"lane\" data-id=\"" << Escape(lane.id) << "\" points=\""
       << canvas.Points(lane.centerline.points()) << "\"/>\n";
  }
  os << "</g>\n<g id=\"trajectories\">\n";
  auto path_of = [](const Trajectory& traj) {
    std::vector<Vec2> pts;
    for (const TrajectorySample& smp : traj.samples) pts.push_back(smp.pose.position());
    return pts;
  };
  os << "<polyline class=\"expert\" points=\"" << canvas.Points(path_of(s.ego.trajectory)) << "\"/>\n";
  if (clip) {
    std::vector<Vec2> pts;
    for (const AgentState& x : clip->states) pts.push_back(x.pose.position());
    os << "<polyline class=\"ego-path\" points=\"" << canvas.Points(pts) << "\"/>\n";
  }
  const auto adversary = AdversaryId(s, clip);
  if (adversary) {
    if (const Agent* a = s.FindAgent(*adversary)) {
      os << "<polyline class=\"adversary-path\" data-id=\"" << Escape(a->id) << "\" points=\""
         << canvas.Points(path_of(a->trajectory)) << "\"/>\n";
    }
  }
  os << "</g>\n";

  std::vector<const Agent*> others;
  for (const Agent& a : s.others) others.push_back(&a);
  std::sort(others.begin(), others.end(), [](const Agent* a, const Agent* b) { return a->id < b->id; });

  for (double when : instants) {
    os << "<g class=\"frame\" data-t=\"" << Num(when) << "\">\n";
    os << "<polygon class=\"agent ego\" data-id=\"" << Escape(s.ego.id) << "\" points=\""
       << canvas.Points(BoxPoints(s.ego.FootprintAt(EgoPoseAt(s, clip, when)))) << "\"/>\n";
    for (const Agent* a : others) {
      std::string cls = std::string("agent ") + CategoryClass(a->category);
      if (adversary && *adversary == a->id) cls += " adversary";
      os << "<polygon class=\"" << cls << "\" data-id=\"" << Escape(a->id) << "\" points=\""
         << canvas.Points(BoxPoints(a->FootprintAt(a->trajectory.At(when).pose))) << "\"/>\n";
    }
    os << "</g>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace bevsim
