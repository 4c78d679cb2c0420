#pragma once

#include <cstdint>
#include <set>
#include <optional>
#include <string>
#include <string_view>

#include "bevsim/scenario.h"
#include "json.hpp"

namespace bevsim {

// Strict accessor over one JSON object: every key read is recorded so that
// unknown keys can be rejected afterwards. Errors are SchemaErrors located
// by JSON pointer.
class ObjectReader {
 public:
  ObjectReader(const nlohmann::json& obj, std::string pointer);

  const std::string& pointer() const { return pointer_; }
  std::string Child(std::string_view key) const { return pointer_ + "/" + std::string(key); }

  bool Has(std::string_view key) const;
  const nlohmann::json& Get(std::string_view key);

  double Number(std::string_view key);
  std::optional<double> OptionalNumber(std::string_view key);
  std::string String(std::string_view key);
  std::optional<std::string> OptionalString(std::string_view key);
  std::uint64_t Unsigned(std::string_view key);
  const nlohmann::json& Array(std::string_view key);
  const nlohmann::json& Object(std::string_view key);

  // Throws SchemaError naming the first key that was never read.
  void RejectUnknown() const;

 private:
  const nlohmann::json& obj_;
  std::string pointer_;
  std::set<std::string, std::less<>> seen_;
};

double AsNumber(const nlohmann::json& v, const std::string& pointer);
Vec2 AsPoint(const nlohmann::json& v, const std::string& pointer);
// {"L", "delta_max", "v_max", "v_min"?, "a_max"}; schema only, not range-checked.
KinematicParams KinematicsFromJson(const nlohmann::json& j, const std::string& pointer);
nlohmann::json ParseJsonText(std::string_view text);

}  // namespace bevsim
