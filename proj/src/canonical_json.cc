#include "bevsim/canonical_json.h"

#include <cmath>
#include <cstdio>

#include "bevsim/errors.h"

namespace bevsim {
namespace {

void Dump(const nlohmann::json& v, int indent, int depth, std::string& out) {
  const bool pretty = indent >= 0;
  auto newline = [&](int d) {
    if (!pretty) return;
    out.push_back('\n');
    out.append(static_cast<std::size_t>(indent * d), ' ');
  };

  switch (v.type()) {
    case nlohmann::json::value_t::object: {
      if (v.empty()) {
        out += "{}";
        return;
      }
      out.push_back('{');
      bool first = true;
      // nlohmann::json objects are std::map backed, so iteration is sorted.
      for (auto it = v.begin(); it != v.end(); ++it) {
        if (!first) out.push_back(',');
        first = false;
        newline(depth + 1);
        out += nlohmann::json(it.key()).dump();
        out += pretty ? ": " : ":";
        Dump(it.value(), indent, depth + 1, out);
      }
      newline(depth);
      out.push_back('}');
      return;
    }
    case nlohmann::json::value_t::array: {
      if (v.empty()) {
        out += "[]";
        return;
      }
      // Arrays of scalars stay on one line to keep point lists readable.
      bool scalar_only = true;
      for (const auto& e : v) scalar_only = scalar_only && !e.is_structured();
      out.push_back('[');
      bool first = true;
      for (const auto& e : v) {
        if (!first) out += (pretty && scalar_only) ? ", " : ",";
        first = false;
        if (!scalar_only) newline(depth + 1);
        Dump(e, indent, depth + 1, out);
      }
      if (!scalar_only) newline(depth);
      out.push_back(']');
      return;
    }
    case nlohmann::json::value_t::number_float:
      out += FormatCanonicalFloat(v.get<double>());
      return;
    default:
      out += v.dump();
      return;
  }
}

}  // namespace

std::string FormatCanonicalFloat(double value) {
  if (!std::isfinite(value)) throw InvalidArgument("non-finite number in canonical JSON");
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9f", value);
  std::string s(buf);
  const auto dot = s.find('.');
  std::size_t end = s.size();
  while (end > dot + 2 && s[end - 1] == '0') --end;
  s.resize(end);
  if (s == "-0.0") s = "0.0";
  return s;
}

std::string DumpCanonical(const nlohmann::json& value, int indent) {
  std::string out;
  Dump(value, indent, 0, out);
  return out;
}

}  // namespace bevsim
