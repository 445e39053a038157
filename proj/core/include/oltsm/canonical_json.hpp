#pragma once

#include <string>

#include <nlohmann/json.hpp>

namespace oltsm {

/*
 * Compact, byte-deterministic JSON rendering: object keys sorted, no
 * whitespace, floating point values printed with a fixed number of
 * significant digits ("%.*g"), negative zero printed as 0.
 */
std::string CanonicalDump(const nlohmann::json& value, int significantDigits);

/* Formats one double the way CanonicalDump does */
std::string FormatDouble(double value, int significantDigits);

} // namespace oltsm
