#include "oltsm/canonical_json.hpp"

#include <cmath>
#include <cstdio>

#include "oltsm/error.hpp"

namespace oltsm {

namespace {

void DumpTo(const nlohmann::json& value, int digits, std::string& out)
{
    switch (value.type()) {
    case nlohmann::json::value_t::object: {
        out += '{';
        bool first = true;
        /* nlohmann::json objects are std::map backed, so iteration is sorted */
        for (const auto& [key, item] : value.items()) {
            if (!first)
                out += ',';
            first = false;
            out += nlohmann::json(key).dump();
            out += ':';
            DumpTo(item, digits, out);
        }
        out += '}';
        break;
    }
    case nlohmann::json::value_t::array: {
        out += '[';
        bool first = true;
        for (const auto& item : value) {
            if (!first)
                out += ',';
            first = false;
            DumpTo(item, digits, out);
        }
        out += ']';
        break;
    }
    case nlohmann::json::value_t::number_float:
        out += FormatDouble(value.get<double>(), digits);
        break;
    default:
        out += value.dump();
        break;
    }
}

} // namespace

std::string FormatDouble(double value, int significantDigits)
{
    if (!std::isfinite(value))
        throw InvalidArgument("cannot serialize a non-finite number");
    if (value == 0.0)
        return "0";

    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.*g", significantDigits, value);
    return buffer;
}

std::string CanonicalDump(const nlohmann::json& value, int significantDigits)
{
    std::string out;
    DumpTo(value, significantDigits, out);
    return out;
}

} // namespace oltsm
