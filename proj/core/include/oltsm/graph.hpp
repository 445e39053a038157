#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "oltsm/geometry.hpp"

namespace oltsm {

using NodeId = std::uint32_t;
using ClassId = std::uint32_t;

constexpr NodeId kInvalidNode = std::numeric_limits<NodeId>::max();

/* Open-ended node/edge properties (color, counters, ...) */
using AttrValue = std::variant<double, std::string>;
using AttrMap = std::map<std::string, AttrValue>;

/* Object landmark. center is a session-anchored, magnetic-aligned position
 * kept for export only; matching never reads it. */
struct LandmarkNode
{
    NodeId id = kInvalidNode;
    ClassId classId = 0;
    Vec3 center = Vec3::Zero();
    AttrMap attrs;
};

/* Undirected edge; dvec points from a to b in the magnetic frame */
struct RelativeEdge
{
    NodeId a = kInvalidNode;
    NodeId b = kInvalidNode;
    double dis = 0.0;
    double yaw = 0.0;
    Vec3 dvec = Vec3::Zero();
    AttrMap attrs;

    /* dvec as seen when walking the edge starting from node `from` */
    Vec3 DirectionFrom(NodeId from) const { return from == a ? dvec : Vec3(-dvec); }
    NodeId Other(NodeId from) const { return from == a ? b : a; }
};

/* Node id with its hop distance from a BFS root */
struct HopEntry
{
    NodeId id;
    int hops;

    bool operator==(const HopEntry&) const = default;
};

class SemanticGraph
{
public:
    SemanticGraph() = default;
    explicit SemanticGraph(std::vector<std::string> classTable);

    const std::vector<std::string>& classTable() const { return mClassTable; }
    std::size_t ClassCount() const { return mClassTable.size(); }

    /* Inserts a node. If node.id is kInvalidNode the id becomes
     * (max id + 1), starting at 0; an explicit id must be unused. */
    NodeId AddNode(LandmarkNode node);

    /* Creates or replaces the edge {a, b}; dis and yaw are derived from dvec */
    const RelativeEdge& AddEdge(NodeId a, NodeId b, const Vec3& dvec, AttrMap attrs = {});

    bool HasNode(NodeId id) const { return mNodes.count(id) != 0; }
    bool HasEdge(NodeId a, NodeId b) const;

    const LandmarkNode& Node(NodeId id) const;
    LandmarkNode& MutableNode(NodeId id);
    const RelativeEdge& Edge(NodeId a, NodeId b) const;

    /* Ascending-id adjacency of a node */
    const std::set<NodeId>& Adjacent(NodeId id) const;

    const std::map<NodeId, LandmarkNode>& nodes() const { return mNodes; }
    const std::map<std::pair<NodeId, NodeId>, RelativeEdge>& edges() const { return mEdges; }

    std::size_t NodeCount() const { return mNodes.size(); }
    std::size_t EdgeCount() const { return mEdges.size(); }
    bool Empty() const { return mNodes.empty(); }

    /* Largest id ever assigned plus one */
    NodeId NextId() const { return mNextId; }

    /* BFS ball of radius maxHops around root, root excluded, ascending id */
    std::vector<HopEntry> Neighbors(NodeId root, int maxHops) const;

    /* Nodes listed in ids plus every edge with both endpoints listed */
    SemanticGraph InducedSubgraph(const std::set<NodeId>& ids) const;

    bool operator==(const SemanticGraph& other) const;

private:
    static std::pair<NodeId, NodeId> Key(NodeId a, NodeId b)
    { return a < b ? std::make_pair(a, b) : std::make_pair(b, a); }

    std::vector<std::string> mClassTable;
    std::map<NodeId, LandmarkNode> mNodes;
    std::map<std::pair<NodeId, NodeId>, RelativeEdge> mEdges;
    std::map<NodeId, std::set<NodeId>> mAdjacency;
    NodeId mNextId = 0;
};

/*
 * ShortTermGraph holds the ids of the (at most) five most recently
 * associated nodes, oldest first. Pushing a new id into a full ring evicts
 * the oldest; pushing an id already present moves it to the newest slot.
 */
class ShortTermGraph
{
public:
    static constexpr std::size_t kCapacity = 5;

    explicit ShortTermGraph(std::size_t capacity = kCapacity);

    /* Returns the evicted id, if any */
    std::optional<NodeId> Push(NodeId id);

    bool Contains(NodeId id) const;
    void Clear() { mIds.clear(); }

    const std::deque<NodeId>& ids() const { return mIds; }
    std::size_t Size() const { return mIds.size(); }
    std::size_t Capacity() const { return mCapacity; }
    bool Empty() const { return mIds.empty(); }

    /* Induced view of the ring members inside graph */
    SemanticGraph View(const SemanticGraph& graph) const;

private:
    std::size_t mCapacity;
    std::deque<NodeId> mIds;
};

} // namespace oltsm
