#include <cmath>

#include "bevsim/canonical_json.h"
#include "bevsim/json_reader.h"
#include "bevsim/scenario.h"

namespace bevsim {

using nlohmann::json;

// ---------------------------------------------------------------------------
// ObjectReader

ObjectReader::ObjectReader(const json& obj, std::string pointer)
    : obj_(obj), pointer_(std::move(pointer)) {
  if (!obj_.is_object()) throw SchemaError(pointer_.empty() ? "/" : pointer_, "expected an object");
}

bool ObjectReader::Has(std::string_view key) const {
  return obj_.find(std::string(key)) != obj_.end();
}

const json& ObjectReader::Get(std::string_view key) {
  const auto it = obj_.find(std::string(key));
  if (it == obj_.end()) throw SchemaError(Child(key), "missing required field");
  seen_.emplace(key);
  return *it;
}

double ObjectReader::Number(std::string_view key) { return AsNumber(Get(key), Child(key)); }

std::optional<double> ObjectReader::OptionalNumber(std::string_view key) {
  if (!Has(key)) return std::nullopt;
  return Number(key);
}

std::string ObjectReader::String(std::string_view key) {
  const json& v = Get(key);
  if (!v.is_string()) throw SchemaError(Child(key), "expected a string");
  return v.get<std::string>();
}

std::optional<std::string> ObjectReader::OptionalString(std::string_view key) {
  if (!Has(key)) return std::nullopt;
  const json& v = Get(key);
  if (v.is_null()) return std::nullopt;
  if (!v.is_string()) throw SchemaError(Child(key), "expected a string");
  return v.get<std::string>();
}

std::uint64_t ObjectReader::Unsigned(std::string_view key) {
  const json& v = Get(key);
  if (!v.is_number_unsigned()) throw SchemaError(Child(key), "expected a non-negative integer");
  return v.get<std::uint64_t>();
}

const json& ObjectReader::Array(std::string_view key) {
  const json& v = Get(key);
  if (!v.is_array()) throw SchemaError(Child(key), "expected an array");
  return v;
}

const json& ObjectReader::Object(std::string_view key) {
  const json& v = Get(key);
  if (!v.is_object()) throw SchemaError(Child(key), "expected an object");
  return v;
}

void ObjectReader::RejectUnknown() const {
  for (auto it = obj_.begin(); it != obj_.end(); ++it) {
    if (seen_.find(it.key()) == seen_.end()) throw SchemaError(Child(it.key()), "unknown field");
  }
}

double AsNumber(const json& v, const std::string& pointer) {
  if (!v.is_number()) throw SchemaError(pointer, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw SchemaError(pointer, "expected a finite number");
  return d;
}

Vec2 AsPoint(const json& v, const std::string& pointer) {
  if (!v.is_array() || v.size() != 2) throw SchemaError(pointer, "expected [x, y]");
  return {AsNumber(v[0], pointer + "/0"), AsNumber(v[1], pointer + "/1")};
}

// Stored headings are rounded, so +-pi can come back just outside (-pi, pi].
// Snap those to pi to keep the canonical text a fixed point.
double ReadHeading(double theta) {
  if (std::abs(std::abs(theta) - kPi) <= 1e-8) return kPi;
  return NormalizeAngle(theta);
}

json ParseJsonText(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(e.what());
  }
}

// ---------------------------------------------------------------------------
// Scenario <-> JSON

namespace {

std::vector<Vec2> ReadPoints(const json& arr, const std::string& ptr) {
  if (!arr.is_array()) throw SchemaError(ptr, "expected an array of points");
  std::vector<Vec2> pts;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    pts.push_back(AsPoint(arr[i], ptr + "/" + std::to_string(i)));
  }
  return pts;
}

LaneDirection ReadDirection(const std::string& s, const std::string& ptr) {
  if (s == "FORWARD") return LaneDirection::kForward;
  if (s == "OPPOSITE") return LaneDirection::kOpposite;
  throw SchemaError(ptr, "unknown lane direction '" + s + "'");
}

Lane ReadLane(const json& j, const std::string& ptr) {
  ObjectReader r(j, ptr);
  Lane lane;
  lane.id = r.String("id");
  const std::vector<Vec2> pts = ReadPoints(r.Array("centerline"), r.Child("centerline"));
  try {
    lane.centerline = Polyline(pts);
  } catch (const InvalidArgument& e) {
    throw ValidationError(r.Child("centerline"), e.what());
  }
  lane.width = r.Number("width");
  lane.left_neighbor = r.OptionalString("left_neighbor");
  lane.right_neighbor = r.OptionalString("right_neighbor");
  lane.direction = ReadDirection(r.String("direction"), r.Child("direction"));
  r.RejectUnknown();
  return lane;
}

}  // namespace

KinematicParams KinematicsFromJson(const json& j, const std::string& ptr) {
  ObjectReader r(j, ptr);
  KinematicParams k;
  k.wheelbase = r.Number("L");
  k.delta_max = r.Number("delta_max");
  k.v_max = r.Number("v_max");
  k.v_min = r.OptionalNumber("v_min").value_or(0.0);
  k.a_max = r.Number("a_max");
  r.RejectUnknown();
  return k;
}

namespace {

Agent ReadAgent(const json& j, const std::string& ptr) {
  ObjectReader r(j, ptr);
  Agent a;
  a.id = r.String("id");
  const std::string category = r.String("category");
  const auto parsed = ParseAgentCategory(category);
  if (!parsed) throw SchemaError(r.Child("category"), "unknown category '" + category + "'");
  a.category = *parsed;
  a.half_length = r.Number("half_length");
  a.half_width = r.Number("half_width");
  if (r.Has("kinematics")) {
    a.kinematics = KinematicsFromJson(r.Object("kinematics"), r.Child("kinematics"));
  } else {
    a.kinematics = DefaultKinematicParams(a.category);
  }
  const json& traj = r.Array("trajectory");
  for (std::size_t i = 0; i < traj.size(); ++i) {
    ObjectReader sr(traj[i], r.Child("trajectory") + "/" + std::to_string(i));
    TrajectorySample s;
    s.t = sr.Number("t");
    s.pose.x = sr.Number("x");
    s.pose.y = sr.Number("y");
    s.pose.theta = ReadHeading(sr.Number("theta"));
    s.v = sr.Number("v");
    sr.RejectUnknown();
    a.trajectory.samples.push_back(s);
  }
  r.RejectUnknown();
  return a;
}

json PointsToJson(const std::vector<Vec2>& pts) {
  json arr = json::array();
  for (const Vec2& p : pts) arr.push_back(json::array({p.x, p.y}));
  return arr;
}

json AgentToJson(const Agent& a) {
  json j;
  j["id"] = a.id;
  j["category"] = std::string(ToString(a.category));
  j["half_length"] = a.half_length;
  j["half_width"] = a.half_width;
  if (a.kinematics) {
    j["kinematics"] = {{"L", a.kinematics->wheelbase},
                       {"delta_max", a.kinematics->delta_max},
                       {"v_max", a.kinematics->v_max},
                       {"v_min", a.kinematics->v_min},
                       {"a_max", a.kinematics->a_max}};
  }
  json traj = json::array();
  for (const TrajectorySample& s : a.trajectory.samples) {
    traj.push_back({{"t", s.t}, {"x", s.pose.x}, {"y", s.pose.y}, {"theta", s.pose.theta},
                    {"v", s.v}});
  }
  j["trajectory"] = std::move(traj);
  return j;
}

}  // namespace

Scenario ScenarioFromJson(const json& doc) {
  ObjectReader r(doc, "");
  const json& version = r.Get("schema_version");
  if (!version.is_string() || version.get<std::string>() != kSchemaVersion) {
    throw SchemaError("/schema_version", "unsupported schema version " + version.dump());
  }

  Scenario s;
  s.id = r.String("id");
  s.dt = r.Number("dt");
  s.horizon = r.Number("horizon");

  ObjectReader m(r.Object("map"), "/map");
  const json& drivable = m.Array("drivable");
  for (std::size_t i = 0; i < drivable.size(); ++i) {
    const std::string ptr = "/map/drivable/" + std::to_string(i);
    const std::vector<Vec2> ring = ReadPoints(drivable[i], ptr);
    try {
      s.map.drivable.emplace_back(ring);
    } catch (const InvalidArgument& e) {
      throw ValidationError(ptr, e.what());
    }
  }
  const json& lanes = m.Array("lanes");
  for (std::size_t i = 0; i < lanes.size(); ++i) {
    s.map.lanes.push_back(ReadLane(lanes[i], "/map/lanes/" + std::to_string(i)));
  }
  m.RejectUnknown();

  s.ego = ReadAgent(r.Object("ego"), "/ego");
  const json& others = r.Array("others");
  for (std::size_t i = 0; i < others.size(); ++i) {
    s.others.push_back(ReadAgent(others[i], "/others/" + std::to_string(i)));
  }

  if (r.Has("provenance")) {
    ObjectReader p(r.Object("provenance"), "/provenance");
    Provenance prov;
    prov.source_id = p.String("source_id");
    prov.transform = p.String("transform");
    if (prov.transform != "interpolate" && prov.transform != "extend" &&
        prov.transform != "adversary") {
      throw SchemaError("/provenance/transform", "unknown transform '" + prov.transform + "'");
    }
    prov.params = p.Object("params");
    p.RejectUnknown();
    s.provenance = std::move(prov);
  }
  r.RejectUnknown();

  ValidateScenario(s);
  return s;
}

json ScenarioToJson(const Scenario& s) {
  json j;
  j["schema_version"] = std::string(kSchemaVersion);
  j["id"] = s.id;
  j["dt"] = s.dt;
  j["horizon"] = s.horizon;
  json drivable = json::array();
  for (const Polygon& poly : s.map.drivable) drivable.push_back(PointsToJson(poly.vertices()));
  json lanes = json::array();
  for (const Lane& lane : s.map.lanes) {
    json l;
    l["id"] = lane.id;
    l["centerline"] = PointsToJson(lane.centerline.points());
    l["width"] = lane.width;
    if (lane.left_neighbor) l["left_neighbor"] = *lane.left_neighbor;
    if (lane.right_neighbor) l["right_neighbor"] = *lane.right_neighbor;
    l["direction"] = std::string(ToString(lane.direction));
    lanes.push_back(std::move(l));
  }
  j["map"] = {{"drivable", std::move(drivable)}, {"lanes", std::move(lanes)}};
  j["ego"] = AgentToJson(s.ego);
  json others = json::array();
  for (const Agent& a : s.others) others.push_back(AgentToJson(a));
  j["others"] = std::move(others);
  if (s.provenance) {
    j["provenance"] = {{"source_id", s.provenance->source_id},
                       {"transform", s.provenance->transform},
                       {"params", s.provenance->params}};
  }
  return j;
}

Scenario ParseScenario(std::string_view text) { return ScenarioFromJson(ParseJsonText(text)); }

std::string SerializeScenario(const Scenario& s) {
  ValidateScenario(s);
  return DumpCanonical(ScenarioToJson(s), 2) + "\n";
}

Scenario LoadScenario(const std::string& path) { return ParseScenario(ReadFile(path)); }

void SaveScenario(const Scenario& s, const std::string& path) {
  WriteFile(path, SerializeScenario(s));
}

}  // namespace bevsim
