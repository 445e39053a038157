#include "oltsm/descriptor.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "oltsm/canonical_json.hpp"
#include "oltsm/error.hpp"

namespace oltsm {

namespace {

constexpr std::string_view kDescriptorFormat = "oltsm-desc/1";

ClassId PaddingClass(const SemanticGraph& graph)
{
    return static_cast<ClassId>(graph.ClassCount());
}

void CheckRoot(const SemanticGraph& graph, NodeId root, int length)
{
    if (!graph.HasNode(root))
        throw InvalidArgument("unknown descriptor root " + std::to_string(root));
    if (length < 2)
        throw InvalidArgument("path length must be at least 2 nodes");
}

/* Completes a partial path with padding slots */
WalkPath Padded(const SemanticGraph& graph, const std::vector<NodeId>& prefix, int length)
{
    WalkPath path;
    path.nodes = prefix;
    path.classes.reserve(length);
    path.vectors.reserve(length - 1);

    for (std::size_t i = 0; i < prefix.size(); ++i) {
        path.classes.push_back(graph.Node(prefix[i]).classId);
        if (i > 0)
            path.vectors.push_back(graph.Edge(prefix[i - 1], prefix[i]).DirectionFrom(prefix[i - 1]));
    }
    while (path.nodes.size() < static_cast<std::size_t>(length)) {
        path.nodes.push_back(kInvalidNode);
        path.classes.push_back(PaddingClass(graph));
        path.vectors.push_back(Vec3::Zero());
    }
    return path;
}

void Extend(const SemanticGraph& graph, std::vector<NodeId>& prefix, int length,
            std::vector<WalkPath>& out)
{
    if (prefix.size() == static_cast<std::size_t>(length)) {
        out.push_back(Padded(graph, prefix, length));
        return;
    }

    bool extended = false;
    for (const NodeId next : graph.Adjacent(prefix.back())) {
        if (std::find(prefix.begin(), prefix.end(), next) != prefix.end())
            continue;
        extended = true;
        prefix.push_back(next);
        Extend(graph, prefix, length, out);
        prefix.pop_back();
    }

    if (!extended)
        out.push_back(Padded(graph, prefix, length));
}

void SortCanonical(std::vector<WalkPath>& paths, std::size_t classCount)
{
    std::vector<std::pair<std::uint64_t, std::size_t>> keys;
    keys.reserve(paths.size());
    for (std::size_t i = 0; i < paths.size(); ++i)
        keys.emplace_back(EncodeClassSequence(paths[i].classes, classCount), i);

    std::sort(keys.begin(), keys.end(), [&paths](const auto& lhs, const auto& rhs) {
        if (lhs.first != rhs.first)
            return lhs.first < rhs.first;
        return paths[lhs.second].nodes < paths[rhs.second].nodes;
    });

    std::vector<WalkPath> sorted;
    sorted.reserve(paths.size());
    for (const auto& key : keys)
        sorted.push_back(std::move(paths[key.second]));
    paths = std::move(sorted);
}

nlohmann::json DescriptorToJson(const SceneDescriptor& d)
{
    nlohmann::json vectors = nlohmann::json::array();
    for (const auto& v : d.desD)
        vectors.push_back({ v.x(), v.y(), v.z() });
    return {
        { "root", d.root },
        { "root_class", d.rootClass },
        { "k", d.classCount },
        { "des_s", d.desS },
        { "des_d", std::move(vectors) },
        { "nodes", d.pathNodes },
    };
}

SceneDescriptor DescriptorFromJson(const nlohmann::json& doc, int pathLength)
{
    SceneDescriptor d;
    d.root = doc.at("root").get<NodeId>();
    d.rootClass = doc.at("root_class").get<ClassId>();
    d.classCount = doc.at("k").get<std::size_t>();
    d.pathLength = pathLength;
    d.desS = doc.at("des_s").get<std::vector<std::uint64_t>>();
    d.pathNodes = doc.at("nodes").get<std::vector<NodeId>>();
    for (const auto& v : doc.at("des_d"))
        d.desD.emplace_back(v.at(0).get<double>(), v.at(1).get<double>(), v.at(2).get<double>());

    if (d.desD.size() != d.desS.size() * d.VectorsPerPath() ||
        d.pathNodes.size() != d.desS.size() * static_cast<std::size_t>(pathLength))
        throw DataError("descriptor cache entry has inconsistent sizes");
    return d;
}

} // namespace

std::vector<WalkPath> EnumeratePaths(const SemanticGraph& graph, NodeId root, int length)
{
    CheckRoot(graph, root, length);

    std::vector<WalkPath> paths;
    std::vector<NodeId> prefix { root };
    Extend(graph, prefix, length, paths);
    SortCanonical(paths, graph.ClassCount());
    return paths;
}

std::vector<WalkPath> SampleWalks(const SemanticGraph& graph, NodeId root, int length,
                                  int walks, std::uint64_t seed)
{
    CheckRoot(graph, root, length);
    if (walks < 1)
        throw InvalidArgument("number of sampled walks must be positive");

    std::mt19937_64 rng(seed ^ (static_cast<std::uint64_t>(root) * 0x9E3779B97F4A7C15ull));
    std::set<std::vector<NodeId>> seen;
    std::vector<WalkPath> paths;

    for (int w = 0; w < walks; ++w) {
        std::vector<NodeId> prefix { root };
        while (prefix.size() < static_cast<std::size_t>(length)) {
            std::vector<NodeId> options;
            for (const NodeId next : graph.Adjacent(prefix.back()))
                if (std::find(prefix.begin(), prefix.end(), next) == prefix.end())
                    options.push_back(next);
            if (options.empty())
                break;
            std::uniform_int_distribution<std::size_t> pick(0, options.size() - 1);
            prefix.push_back(options[pick(rng)]);
        }
        if (seen.insert(prefix).second)
            paths.push_back(Padded(graph, prefix, length));
    }

    SortCanonical(paths, graph.ClassCount());
    return paths;
}

std::uint64_t EncodeClassSequence(std::span<const ClassId> classes, std::size_t classCount)
{
    if (classCount < 1)
        throw InvalidArgument("class count must be at least 1");

    const std::uint64_t base = classCount + 1;
    constexpr std::uint64_t kMax = std::numeric_limits<std::uint64_t>::max();

    std::uint64_t code = 0;
    for (const ClassId c : classes) {
        if (c > classCount)
            throw InvalidArgument("class index " + std::to_string(c) +
                                  " exceeds padding symbol " + std::to_string(classCount));
        if (code > (kMax - c) / base)
            throw InvalidArgument("class sequence code overflows 64 bits");
        code = code * base + c;
    }
    return code;
}

SceneDescriptor ExtractDescriptor(const SemanticGraph& graph, NodeId root,
                                  const DescriptorConfig& config)
{
    const auto paths = config.sampledWalks > 0 ?
        SampleWalks(graph, root, config.pathLength, config.sampledWalks, config.seed) :
        EnumeratePaths(graph, root, config.pathLength);

    SceneDescriptor d;
    d.root = root;
    d.rootClass = graph.Node(root).classId;
    d.pathLength = config.pathLength;
    d.classCount = graph.ClassCount();
    d.desS.reserve(paths.size());
    d.desD.reserve(paths.size() * d.VectorsPerPath());
    d.pathNodes.reserve(paths.size() * config.pathLength);

    for (const auto& path : paths) {
        d.desS.push_back(EncodeClassSequence(path.classes, d.classCount));
        d.desD.insert(d.desD.end(), path.vectors.begin(), path.vectors.end());
        d.pathNodes.insert(d.pathNodes.end(), path.nodes.begin(), path.nodes.end());
    }
    return d;
}

DescriptorIndex ExtractAll(const SemanticGraph& graph, const DescriptorConfig& config)
{
    DescriptorIndex index;
    for (const auto& [id, node] : graph.nodes())
        index.emplace(id, ExtractDescriptor(graph, id, config));
    return index;
}

void SaveDescriptorCache(const DescriptorIndex& index, std::uint64_t mapFingerprint,
                         int pathLength, const std::filesystem::path& path)
{
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& [id, d] : index)
        entries.push_back(DescriptorToJson(d));

    const nlohmann::json doc = {
        { "format", std::string(kDescriptorFormat) },
        { "map_fingerprint", mapFingerprint },
        { "R", pathLength },
        { "descriptors", std::move(entries) },
    };

    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw DataError("cannot open " + path.string() + " for writing");
    out << CanonicalDump(doc, 17);
}

bool LoadDescriptorCache(const std::filesystem::path& path, std::uint64_t mapFingerprint,
                         int pathLength, DescriptorIndex& index)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        return false;

    try {
        const auto doc = nlohmann::json::parse(in);
        if (doc.at("format").get<std::string>() != kDescriptorFormat ||
            doc.at("map_fingerprint").get<std::uint64_t>() != mapFingerprint ||
            doc.at("R").get<int>() != pathLength)
            return false;

        DescriptorIndex loaded;
        for (const auto& entry : doc.at("descriptors")) {
            auto d = DescriptorFromJson(entry, pathLength);
            loaded.emplace(d.root, std::move(d));
        }
        index = std::move(loaded);
        return true;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("descriptor cache " + path.string() + " is malformed: " + e.what());
    }
}

} // namespace oltsm
