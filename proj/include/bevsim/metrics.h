#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bevsim/errors.h"
#include "bevsim/simulator.h"
#include "json.hpp"

namespace bevsim {

class EmptyInput : public Error {
 public:
  using Error::Error;
};

// Per-clip binarized event ratios. Deviation fields are absent (not zero)
// whenever an edited (adversarial) clip is part of the input.
struct MetricReport {
  std::size_t n_total = 0;
  std::size_t n_failed = 0;  // clips with ClipResult::error, not in n_total
  std::size_t n_dc = 0;
  std::size_t n_sc = 0;
  std::optional<std::size_t> n_pd;
  std::optional<std::size_t> n_hd;
  double dcr = 0.0;
  double scr = 0.0;
  double cr = 0.0;  // dcr + scr
  std::optional<double> pdr;
  std::optional<double> hdr;
  std::optional<double> dr;  // pdr + hdr
  DeviationThresholds thresholds;

  nlohmann::json ToJson() const;
};

// Throws EmptyInput when there are no clips or every clip failed.
MetricReport Aggregate(std::span<const ClipResult> clips, const DeviationThresholds& thresholds);

inline constexpr std::array<const char*, 6> kMetricColumns = {"CR", "DCR", "SCR", "DR", "PDR", "HDR"};

std::array<std::optional<double>, 6> MetricValues(const MetricReport& r);

struct NamedReport {
  std::string name;
  MetricReport report;
};

struct ComparisonRow {
  std::string name;
  std::array<std::optional<double>, 6> values;
  std::array<bool, 6> best{};  // column minimum (ties all flagged)
};

struct ComparisonTable {
  std::vector<ComparisonRow> rows;  // input order

  std::string ToText() const;
  std::string ToCsv() const;
  nlohmann::json ToJson() const;
};

// Throws InvalidArgument on an empty list.
ComparisonTable Compare(std::span<const NamedReport> reports);

// Counts, thresholds and the single-row table.
std::string ReportToText(const MetricReport& report);

}  // namespace bevsim
