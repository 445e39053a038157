#include "oltsm/graph.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "oltsm/error.hpp"

namespace oltsm {

SemanticGraph::SemanticGraph(std::vector<std::string> classTable) :
    mClassTable(std::move(classTable))
{
}

NodeId SemanticGraph::AddNode(LandmarkNode node)
{
    if (node.classId >= this->mClassTable.size())
        throw InvalidArgument("node class id " + std::to_string(node.classId) +
                              " outside class table of size " +
                              std::to_string(this->mClassTable.size()));
    if (!node.center.allFinite())
        throw InvalidArgument("node center must be finite");

    if (node.id == kInvalidNode) {
        node.id = this->mNextId;
    } else if (this->mNodes.count(node.id) != 0) {
        throw InvalidArgument("duplicate node id " + std::to_string(node.id));
    }

    const NodeId id = node.id;
    this->mNextId = std::max(this->mNextId, id + 1);
    this->mAdjacency[id];
    this->mNodes.emplace(id, std::move(node));
    return id;
}

const RelativeEdge& SemanticGraph::AddEdge(NodeId a, NodeId b, const Vec3& dvec, AttrMap attrs)
{
    if (a == b)
        throw InvalidArgument("self-loop on node " + std::to_string(a));
    if (!this->HasNode(a) || !this->HasNode(b))
        throw InvalidArgument("edge references a missing node (" +
                              std::to_string(a) + ", " + std::to_string(b) + ")");
    if (!dvec.allFinite())
        throw InvalidArgument("edge direction vector must be finite");

    RelativeEdge edge;
    edge.a = a;
    edge.b = b;
    edge.dvec = dvec;
    edge.dis = dvec.norm();
    edge.yaw = PlanarHeadingDeg(dvec);
    edge.attrs = std::move(attrs);

    this->mAdjacency[a].insert(b);
    this->mAdjacency[b].insert(a);
    auto& slot = this->mEdges[Key(a, b)];
    slot = std::move(edge);
    return slot;
}

bool SemanticGraph::HasEdge(NodeId a, NodeId b) const
{
    return this->mEdges.count(Key(a, b)) != 0;
}

const LandmarkNode& SemanticGraph::Node(NodeId id) const
{
    const auto it = this->mNodes.find(id);
    if (it == this->mNodes.end())
        throw InvalidArgument("unknown node id " + std::to_string(id));
    return it->second;
}

LandmarkNode& SemanticGraph::MutableNode(NodeId id)
{
    const auto it = this->mNodes.find(id);
    if (it == this->mNodes.end())
        throw InvalidArgument("unknown node id " + std::to_string(id));
    return it->second;
}

const RelativeEdge& SemanticGraph::Edge(NodeId a, NodeId b) const
{
    const auto it = this->mEdges.find(Key(a, b));
    if (it == this->mEdges.end())
        throw InvalidArgument("no edge between " + std::to_string(a) +
                              " and " + std::to_string(b));
    return it->second;
}

const std::set<NodeId>& SemanticGraph::Adjacent(NodeId id) const
{
    const auto it = this->mAdjacency.find(id);
    if (it == this->mAdjacency.end())
        throw InvalidArgument("unknown node id " + std::to_string(id));
    return it->second;
}

std::vector<HopEntry> SemanticGraph::Neighbors(NodeId root, int maxHops) const
{
    if (!this->HasNode(root))
        throw InvalidArgument("unknown node id " + std::to_string(root));
    if (maxHops < 1)
        throw InvalidArgument("max_hops must be at least 1");

    std::map<NodeId, int> hops { { root, 0 } };
    std::queue<NodeId> frontier;
    frontier.push(root);

    while (!frontier.empty()) {
        const NodeId current = frontier.front();
        frontier.pop();
        const int depth = hops[current];
        if (depth == maxHops)
            continue;
        for (const NodeId next : this->mAdjacency.at(current)) {
            if (hops.emplace(next, depth + 1).second)
                frontier.push(next);
        }
    }

    std::vector<HopEntry> result;
    result.reserve(hops.size() - 1);
    for (const auto& [id, depth] : hops)
        if (id != root)
            result.push_back({ id, depth });
    return result;
}

SemanticGraph SemanticGraph::InducedSubgraph(const std::set<NodeId>& ids) const
{
    SemanticGraph sub(this->mClassTable);
    for (const NodeId id : ids)
        sub.AddNode(this->Node(id));

    for (const NodeId id : ids) {
        for (const NodeId other : this->mAdjacency.at(id)) {
            if (other <= id || ids.count(other) == 0)
                continue;
            const auto& edge = this->mEdges.at(Key(id, other));
            /* Copy verbatim so dis/yaw stay bit-identical */
            sub.mAdjacency[id].insert(other);
            sub.mAdjacency[other].insert(id);
            sub.mEdges.emplace(Key(id, other), edge);
        }
    }
    sub.mNextId = this->mNextId;
    return sub;
}

bool SemanticGraph::operator==(const SemanticGraph& other) const
{
    if (this->mClassTable != other.mClassTable)
        return false;
    if (this->mNodes.size() != other.mNodes.size() ||
        this->mEdges.size() != other.mEdges.size())
        return false;

    for (const auto& [id, node] : this->mNodes) {
        const auto it = other.mNodes.find(id);
        if (it == other.mNodes.end())
            return false;
        const auto& rhs = it->second;
        if (node.classId != rhs.classId || node.center != rhs.center || node.attrs != rhs.attrs)
            return false;
    }
    for (const auto& [key, edge] : this->mEdges) {
        const auto it = other.mEdges.find(key);
        if (it == other.mEdges.end())
            return false;
        const auto& rhs = it->second;
        if (edge.a != rhs.a || edge.b != rhs.b || edge.dvec != rhs.dvec ||
            edge.dis != rhs.dis || edge.yaw != rhs.yaw || edge.attrs != rhs.attrs)
            return false;
    }
    return true;
}

ShortTermGraph::ShortTermGraph(std::size_t capacity) :
    mCapacity(capacity)
{
    if (capacity == 0)
        throw InvalidArgument("short-term graph capacity must be positive");
}

std::optional<NodeId> ShortTermGraph::Push(NodeId id)
{
    const auto it = std::find(this->mIds.begin(), this->mIds.end(), id);
    if (it != this->mIds.end())
        this->mIds.erase(it);

    this->mIds.push_back(id);

    if (this->mIds.size() <= this->mCapacity)
        return std::nullopt;

    const NodeId evicted = this->mIds.front();
    this->mIds.pop_front();
    return evicted;
}

bool ShortTermGraph::Contains(NodeId id) const
{
    return std::find(this->mIds.begin(), this->mIds.end(), id) != this->mIds.end();
}

SemanticGraph ShortTermGraph::View(const SemanticGraph& graph) const
{
    std::set<NodeId> members;
    for (const NodeId id : this->mIds)
        if (graph.HasNode(id))
            members.insert(id);
    return graph.InducedSubgraph(members);
}

} // namespace oltsm
