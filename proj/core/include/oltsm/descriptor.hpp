#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <vector>

#include "oltsm/graph.hpp"

namespace oltsm {

/*
 * Simple path of `length` nodes starting at the root. Paths that hit a dead
 * end before reaching the requested length are padded: node slots hold
 * kInvalidNode, class slots hold the padding class (== class count), and
 * the missing direction vectors are zero.
 */
struct WalkPath
{
    std::vector<NodeId> nodes;
    std::vector<ClassId> classes;
    std::vector<Vec3> vectors;
};

struct DescriptorConfig
{
    int pathLength = 3;     // nodes per path, root included
    int sampledWalks = 0;   // > 0 switches to seeded random walks instead of enumeration
    std::uint64_t seed = 0; // random walk seed, mixed with the root id
};

/*
 * Vector group of a node: one entry per path. desS holds the class-sequence
 * code of every path, desD the (pathLength - 1) direction vectors of each
 * path, flattened. Entries are sorted by code, then by node ids.
 */
class SceneDescriptor
{
public:
    NodeId root = kInvalidNode;
    ClassId rootClass = 0;
    int pathLength = 0;
    std::size_t classCount = 0;

    std::vector<std::uint64_t> desS;
    std::vector<Vec3> desD;
    std::vector<NodeId> pathNodes;

    std::size_t PathCount() const { return desS.size(); }
    std::size_t VectorsPerPath() const { return static_cast<std::size_t>(pathLength - 1); }

    std::span<const Vec3> Vectors(std::size_t path) const
    { return { desD.data() + path * VectorsPerPath(), VectorsPerPath() }; }
    std::span<const NodeId> Nodes(std::size_t path) const
    { return { pathNodes.data() + path * pathLength, static_cast<std::size_t>(pathLength) }; }

    bool operator==(const SceneDescriptor&) const = default;
};

/* All simple paths of `length` nodes from root, canonical order, padded at dead ends */
std::vector<WalkPath> EnumeratePaths(const SemanticGraph& graph, NodeId root, int length);

/* Seeded random simple walks from root (deduplicated, canonical order) */
std::vector<WalkPath> SampleWalks(const SemanticGraph& graph, NodeId root, int length,
                                  int walks, std::uint64_t seed);

/*
 * Positional class-sequence code, sum_i c_i * base^(R - i) with
 * base = classCount + 1 so the padding class stays collision free.
 * Throws InvalidArgument for classes above classCount or on overflow.
 */
std::uint64_t EncodeClassSequence(std::span<const ClassId> classes, std::size_t classCount);

SceneDescriptor ExtractDescriptor(const SemanticGraph& graph, NodeId root,
                                  const DescriptorConfig& config = {});

/* Descriptors for every node of the graph, keyed by node id */
using DescriptorIndex = std::map<NodeId, SceneDescriptor>;
DescriptorIndex ExtractAll(const SemanticGraph& graph, const DescriptorConfig& config = {});

/* Versioned descriptor cache ("oltsm-desc/1") keyed by map fingerprint and R */
void SaveDescriptorCache(const DescriptorIndex& index, std::uint64_t mapFingerprint,
                         int pathLength, const std::filesystem::path& path);
/* Returns false if the file is missing or keyed differently */
bool LoadDescriptorCache(const std::filesystem::path& path, std::uint64_t mapFingerprint,
                         int pathLength, DescriptorIndex& index);

} // namespace oltsm
