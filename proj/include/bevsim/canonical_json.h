#pragma once

#include <string>

#include "json.hpp"

namespace bevsim {

// Canonical JSON text: object keys sorted, integers verbatim, floating-point
// values written with nine digits after the decimal point and trailing zeros
// trimmed (at least one fractional digit kept, negative zero written as 0.0).
// indent < 0 produces a single line. Throws InvalidArgument on NaN/inf.
std::string DumpCanonical(const nlohmann::json& value, int indent = -1);

std::string FormatCanonicalFloat(double value);

}  // namespace bevsim
