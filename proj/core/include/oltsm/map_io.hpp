#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "oltsm/graph.hpp"

namespace oltsm {

inline constexpr std::string_view kMapFormat = "oltsm-map/1";
inline constexpr int kMapSignificantDigits = 9;

/*
 * Map document layout:
 *   {"class_table":[...],
 *    "edges":[{"a","attrs","b","dis","dvec":[x,y,z],"yaw"}...],
 *    "format":"oltsm-map/1",
 *    "nodes":[{"attrs","center":[x,y,z],"cls","id"}...]}
 * Keys are sorted, nodes by id, edges by (min id, max id); floats carry
 * 9 significant digits.
 */
nlohmann::json MapToJson(const SemanticGraph& graph);
SemanticGraph MapFromJson(const nlohmann::json& doc);

std::string SerializeMap(const SemanticGraph& graph);
SemanticGraph DeserializeMap(std::string_view text);

void SaveMap(const SemanticGraph& graph, const std::filesystem::path& path);
SemanticGraph LoadMap(const std::filesystem::path& path);

/* Attribute maps as JSON objects (numbers stay numbers, strings stay strings) */
nlohmann::json AttrsToJson(const AttrMap& attrs);
AttrMap AttrsFromJson(const nlohmann::json& doc);

/* FNV-1a 64 over the canonical serialization; keys descriptor caches */
std::uint64_t MapFingerprint(const SemanticGraph& graph);

} // namespace oltsm
