#include "bevsim/metrics.h"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "bevsim/canonical_json.h"

namespace bevsim {

using nlohmann::json;

MetricReport Aggregate(std::span<const ClipResult> clips, const DeviationThresholds& thresholds) {
  if (clips.empty()) throw EmptyInput("no clips to aggregate");
  MetricReport r;
  r.thresholds = thresholds;
  bool any_edited = false;
  std::size_t n_pd = 0;
  std::size_t n_hd = 0;
  for (const ClipResult& c : clips) {
    if (c.error) {
      ++r.n_failed;
      continue;
    }
    ++r.n_total;
    any_edited = any_edited || c.edited;
    if (c.HasEvent(EventKind::kDynamicCollision)) ++r.n_dc;
    if (c.HasEvent(EventKind::kStaticCollision)) ++r.n_sc;
    if (c.HasEvent(EventKind::kPositionDeviation)) ++n_pd;
    if (c.HasEvent(EventKind::kHeadingDeviation)) ++n_hd;
  }
  if (r.n_total == 0) throw EmptyInput("all " + std::to_string(r.n_failed) + " clips failed");
  const double n = static_cast<double>(r.n_total);
  r.dcr = static_cast<double>(r.n_dc) / n;
  r.scr = static_cast<double>(r.n_sc) / n;
  r.cr = r.dcr + r.scr;
  if (!any_edited) {
    r.n_pd = n_pd;
    r.n_hd = n_hd;
    r.pdr = static_cast<double>(n_pd) / n;
    r.hdr = static_cast<double>(n_hd) / n;
    r.dr = *r.pdr + *r.hdr;
  }
  return r;
}

json MetricReport::ToJson() const {
  json j{{"n_total", n_total}, {"n_failed", n_failed}, {"n_dc", n_dc}, {"n_sc", n_sc},
         {"dcr", dcr},         {"scr", scr},           {"cr", cr},
         {"thresholds", {{"position", thresholds.position}, {"heading", thresholds.heading}}}};
  if (n_pd) j["n_pd"] = *n_pd;
  if (n_hd) j["n_hd"] = *n_hd;
  if (pdr) j["pdr"] = *pdr;
  if (hdr) j["hdr"] = *hdr;
  if (dr) j["dr"] = *dr;
  return j;
}

std::array<std::optional<double>, 6> MetricValues(const MetricReport& r) {
  return {r.cr, r.dcr, r.scr, r.dr, r.pdr, r.hdr};
}

ComparisonTable Compare(std::span<const NamedReport> reports) {
  if (reports.empty()) throw InvalidArgument("nothing to compare");
  ComparisonTable table;
  for (const NamedReport& nr : reports) table.rows.push_back({nr.name, MetricValues(nr.report), {}});
  for (std::size_t c = 0; c < kMetricColumns.size(); ++c) {
    std::optional<double> lowest;
    for (const ComparisonRow& row : table.rows) {
      if (row.values[c] && (!lowest || *row.values[c] < *lowest)) lowest = row.values[c];
    }
    for (ComparisonRow& row : table.rows) row.best[c] = row.values[c] && *row.values[c] == *lowest;
  }
  return table;
}

namespace {

std::string Cell(const std::optional<double>& v, bool best) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f%s", *v, best ? "*" : "");
  return buf;
}

}  // namespace

std::string ComparisonTable::ToText() const {
  std::size_t name_width = 6;
  for (const ComparisonRow& row : rows) name_width = std::max(name_width, row.name.size());
  constexpr int kCell = 8;
  std::ostringstream os;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%-*s", static_cast<int>(name_width), "method");
  os << buf;
  for (const char* col : kMetricColumns) {
    std::snprintf(buf, sizeof(buf), "  %*s", kCell, col);
    os << buf;
  }
  os << "\n";
  for (const ComparisonRow& row : rows) {
    std::snprintf(buf, sizeof(buf), "%-*s", static_cast<int>(name_width), row.name.c_str());
    os << buf;
    for (std::size_t c = 0; c < kMetricColumns.size(); ++c) {
      std::snprintf(buf, sizeof(buf), "  %*s", kCell, Cell(row.values[c], row.best[c]).c_str());
      os << buf;
    }
    os << "\n";
  }
  os << "(* lowest in column)\n";
  return os.str();
}

std::string ComparisonTable::ToCsv() const {
  std::ostringstream os;
  os << "method";
  for (const char* col : kMetricColumns) os << "," << col;
  os << "\n";
  for (const ComparisonRow& row : rows) {
    os << row.name;
    for (const auto& v : row.values) os << "," << (v ? FormatCanonicalFloat(*v) : "");
    os << "\n";
  }
  return os.str();
}

json ComparisonTable::ToJson() const {
  json arr = json::array();
  for (const ComparisonRow& row : rows) {
    json values = json::object();
    json best = json::array();
    for (std::size_t c = 0; c < kMetricColumns.size(); ++c) {
      if (row.values[c]) values[kMetricColumns[c]] = *row.values[c];
      if (row.best[c]) best.push_back(kMetricColumns[c]);
    }
    arr.push_back({{"name", row.name}, {"values", std::move(values)}, {"best", std::move(best)}});
  }
  return {{"rows", std::move(arr)}};
}

std::string ReportToText(const MetricReport& r) {
  std::ostringstream os;
  os << "clips: " << r.n_total << " evaluated, " << r.n_failed << " failed\n";
  os << "dynamic collisions: " << r.n_dc << "  static collisions: " << r.n_sc << "\n";
  if (r.n_pd && r.n_hd) {
    os << "position deviations: " << *r.n_pd << "  heading deviations: " << *r.n_hd << "\n";
  } else {
    os << "deviation metrics: not reported (edited scenarios)\n";
  }
  os << "thresholds: position " << FormatCanonicalFloat(r.thresholds.position) << " m, heading "
     << FormatCanonicalFloat(r.thresholds.heading) << " rad\n\n";
  const NamedReport single{"run", r};
  os << Compare(std::span<const NamedReport>(&single, 1)).ToText();
  return os.str();
}

}  // namespace bevsim
