#include "oltsm/map_io.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "oltsm/canonical_json.hpp"
#include "oltsm/error.hpp"

namespace oltsm {

namespace {

nlohmann::json VecToJson(const Vec3& v)
{
    return nlohmann::json::array({ v.x(), v.y(), v.z() });
}

Vec3 VecFromJson(const nlohmann::json& doc, const char* what)
{
    if (!doc.is_array() || doc.size() != 3)
        throw DataError(std::string(what) + " must be an array of 3 numbers");
    Vec3 v;
    for (int i = 0; i < 3; ++i) {
        if (!doc[i].is_number())
            throw DataError(std::string(what) + " must be an array of 3 numbers");
        v[i] = doc[i].get<double>();
    }
    return v;
}

template <class T>
T Require(const nlohmann::json& doc, const char* key)
{
    const auto it = doc.find(key);
    if (it == doc.end())
        throw DataError(std::string("missing field '") + key + "'");
    try {
        return it->get<T>();
    } catch (const nlohmann::json::exception&) {
        throw DataError(std::string("field '") + key + "' has the wrong type");
    }
}

/* dvec as it reads back from the file */
Vec3 Rounded(const Vec3& v)
{
    Vec3 out;
    for (int i = 0; i < 3; ++i)
        out[i] = std::strtod(FormatDouble(v[i], kMapSignificantDigits).c_str(), nullptr);
    return out;
}

double AngleGapDeg(double a, double b)
{
    const double d = std::fmod(std::abs(a - b), 360.0);
    return std::min(d, 360.0 - d);
}

} // namespace

nlohmann::json AttrsToJson(const AttrMap& attrs)
{
    nlohmann::json out = nlohmann::json::object();
    for (const auto& [key, value] : attrs) {
        if (const auto* number = std::get_if<double>(&value))
            out[key] = *number;
        else
            out[key] = std::get<std::string>(value);
    }
    return out;
}

AttrMap AttrsFromJson(const nlohmann::json& doc)
{
    if (!doc.is_object())
        throw DataError("attrs must be an object");
    AttrMap attrs;
    for (const auto& [key, value] : doc.items()) {
        if (value.is_number())
            attrs.emplace(key, value.get<double>());
        else if (value.is_string())
            attrs.emplace(key, value.get<std::string>());
        else
            throw DataError("attribute '" + key + "' must be a number or a string");
    }
    return attrs;
}

nlohmann::json MapToJson(const SemanticGraph& graph)
{
    nlohmann::json doc;
    doc["format"] = std::string(kMapFormat);
    doc["class_table"] = graph.classTable();

    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& [id, node] : graph.nodes()) {
        nodes.push_back({
            { "id", id },
            { "cls", node.classId },
            { "center", VecToJson(node.center) },
            { "attrs", AttrsToJson(node.attrs) },
        });
    }
    doc["nodes"] = std::move(nodes);

    nlohmann::json edges = nlohmann::json::array();
    for (const auto& [key, edge] : graph.edges()) {
        /* dis and yaw follow the printed dvec so that a reload re-derives
         * the same values and re-serializes to the same bytes */
        const Vec3 dvec = Rounded(edge.dvec);
        edges.push_back({
            { "a", edge.a },
            { "b", edge.b },
            { "dis", dvec.norm() },
            { "yaw", PlanarHeadingDeg(dvec) },
            { "dvec", VecToJson(edge.dvec) },
            { "attrs", AttrsToJson(edge.attrs) },
        });
    }
    doc["edges"] = std::move(edges);
    return doc;
}

SemanticGraph MapFromJson(const nlohmann::json& doc)
{
    if (!doc.is_object())
        throw DataError("map document must be a JSON object");
    if (Require<std::string>(doc, "format") != kMapFormat)
        throw DataError("unsupported map format, expected " + std::string(kMapFormat));

    SemanticGraph graph(Require<std::vector<std::string>>(doc, "class_table"));

    const auto nodes = doc.find("nodes");
    const auto edges = doc.find("edges");
    if (nodes == doc.end() || !nodes->is_array())
        throw DataError("map 'nodes' must be an array");
    if (edges == doc.end() || !edges->is_array())
        throw DataError("map 'edges' must be an array");

    try {
        for (const auto& item : *nodes) {
            LandmarkNode node;
            node.id = Require<NodeId>(item, "id");
            node.classId = Require<ClassId>(item, "cls");
            node.center = VecFromJson(Require<nlohmann::json>(item, "center"), "center");
            node.attrs = AttrsFromJson(Require<nlohmann::json>(item, "attrs"));
            graph.AddNode(std::move(node));
        }

        for (const auto& item : *edges) {
            const auto a = Require<NodeId>(item, "a");
            const auto b = Require<NodeId>(item, "b");
            const Vec3 dvec = VecFromJson(Require<nlohmann::json>(item, "dvec"), "dvec");
            const auto& edge = graph.AddEdge(a, b, dvec,
                                             AttrsFromJson(Require<nlohmann::json>(item, "attrs")));

            /* dis and yaw are re-derived from dvec; the stored copies must agree */
            const double dis = Require<double>(item, "dis");
            const double yaw = Require<double>(item, "yaw");
            if (std::abs(dis - edge.dis) > 1e-6 * (1.0 + edge.dis))
                throw DataError("edge (" + std::to_string(a) + ", " + std::to_string(b) +
                                ") dis disagrees with |dvec|");
            if (edge.dis > 1e-6 && AngleGapDeg(yaw, edge.yaw) > 1e-4)
                throw DataError("edge (" + std::to_string(a) + ", " + std::to_string(b) +
                                ") yaw disagrees with dvec heading");
        }
    } catch (const InvalidArgument& e) {
        throw DataError(std::string("inconsistent map: ") + e.what());
    }
    return graph;
}

std::string SerializeMap(const SemanticGraph& graph)
{
    return CanonicalDump(MapToJson(graph), kMapSignificantDigits);
}

SemanticGraph DeserializeMap(std::string_view text)
{
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(std::string("map is not valid JSON: ") + e.what());
    }
    return MapFromJson(doc);
}

void SaveMap(const SemanticGraph& graph, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw DataError("cannot open " + path.string() + " for writing");
    out << SerializeMap(graph);
}

SemanticGraph LoadMap(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw DataError("cannot open map file " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return DeserializeMap(buffer.str());
}

std::uint64_t MapFingerprint(const SemanticGraph& graph)
{
    std::uint64_t hash = 14695981039346656037ull;
    for (const unsigned char c : SerializeMap(graph)) {
        hash ^= c;
        hash *= 1099511628211ull;
    }
    return hash;
}

} // namespace oltsm
