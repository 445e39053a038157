#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "oltsm/descriptor.hpp"
#include "oltsm/graph.hpp"
#include "oltsm/matching.hpp"
#include "oltsm/stream.hpp"

namespace oltsm {

struct AssociationConfig
{
    double gateDistance = 1.0;                  // meters, same-class association gate
    double minConfidence = 0.5;
    std::optional<std::set<ClassId>> staticClasses; // unset: every class is a landmark class
    double edgeMaxDistance = 10.0;              // meters
    int minHits = 3;                            // sightings before a track becomes a node
    int trackFrames = 30;                       // frames a node stays associable unseen
    int tentativeFrames = 3;                    // frames an unconfirmed track survives unseen

    void Validate() const;
    bool IsStatic(ClassId c) const { return !staticClasses || staticClasses->count(c) != 0; }
};

struct MapperConfig
{
    AssociationConfig association;
    MatchConfig match;
    double tauMap = 0.8;        // hierarchy acceptance threshold on match score
    double mergeGate = 1.0;     // meters, largest mean root-vector offset of a merge
    int hierarchyStride = 1;    // frames between hierarchy updates
    int workingRadius = 3;      // hops of LTG context around STG nodes

    void Validate() const;
};

enum class ObservationStatus
{
    Filtered,   // below confidence or not a static landmark class
    Duplicate,  // within the duplicate gate of a track of another class; counts as a class vote
    Tentative,  // associated with a track that is not yet a node
    Matched,    // associated with an existing node
    Created,    // became a new node this frame
};

struct FrameReport
{
    std::vector<NodeId> newNodes;
    std::vector<NodeId> matchedNodes;
    std::vector<std::pair<NodeId, NodeId>> newEdges;
    /* Per input observation, in input order */
    std::vector<ObservationStatus> status;
    std::vector<NodeId> assignment;     // node id for Matched/Created, else kInvalidNode
    MagneticPoint robotPosition;        // session-anchored estimate after this frame
};

/*
 * SessionTracker runs the per-frame association of one session: it keeps
 * robot-centric magnetic positions of recently seen landmarks, chains them
 * through co-observed anchors from frame to frame, creates session nodes and
 * edges, and maintains the short-term graph (the five most recently created
 * nodes). It never sees global poses.
 */
class SessionTracker
{
public:
    SessionTracker(AssociationConfig config, double duplicateGate,
                   std::size_t stgCapacity = ShortTermGraph::kCapacity);

    /* Starts a session; drops all per-session state */
    void Begin(const StreamHeader& header);
    bool Started() const { return mStarted; }

    FrameReport ProcessFrame(const DetectionFrame& frame);

    const SemanticGraph& graph() const { return mGraph; }
    const ShortTermGraph& stg() const { return mStg; }
    const StreamHeader& header() const { return mHeader; }
    std::size_t FramesProcessed() const { return mFrameIndex; }

    /* True while the node is still associable (seen within trackFrames) */
    bool IsTracked(NodeId node) const;
    /* Current robot-centric magnetic position of a tracked node */
    std::optional<MagneticPoint> TrackedPosition(NodeId node) const;

private:
    struct Track
    {
        NodeId node = kInvalidNode;
        ClassId classId = 0;
        Vec3 rel = Vec3::Zero();   // robot-centric magnetic position
        std::size_t lastSeen = 0;
        int hits = 0;
        std::map<ClassId, int> votes;
        std::optional<std::string> color;

        void Vote(ClassId c);
    };

    struct Candidate
    {
        std::size_t obs;
        ClassId classId;
        Vec3 rel;
        double range;
    };

    std::vector<std::pair<std::size_t, std::size_t>>
    Associate(const std::vector<Candidate>& candidates, const Vec3& shift) const;

    NodeId CreateNode(Track& track, FrameReport& report);

    AssociationConfig mConfig;
    double mDuplicateGate;
    StreamHeader mHeader;
    bool mStarted = false;

    SemanticGraph mGraph;
    ShortTermGraph mStg;
    std::vector<Track> mTracks;
    std::map<NodeId, std::size_t> mCenterCounts;
    Vec3 mRobot = Vec3::Zero();
    std::size_t mFrameIndex = 0;
    std::optional<double> mLastTimestamp;
};

/* Union of radius-hop balls around the given LTG nodes (ids missing from the
 * LTG are ignored), as an induced subgraph of the LTG */
SemanticGraph BuildWorkingGraph(const SemanticGraph& ltg, std::span<const NodeId> roots,
                                int radius = 3);

/* Localizes the tracker's short-term graph against a database. Throws
 * InvalidArgument when the short-term graph is empty. */
LocalizationResult Relocalize(const SessionTracker& session,
                              const DescriptorIndex& database,
                              const MatchConfig& config);

struct HierarchyReport
{
    std::vector<std::pair<NodeId, NodeId>> inserted;  // session id -> new LTG id
    std::vector<std::pair<NodeId, NodeId>> merged;    // session id -> existing LTG id
    std::size_t edgesAdded = 0;
    std::size_t workingGraphNodes = 0;
    bool relocalized = false;   // no STG node was merged yet, searched the whole LTG
};

/*
 * Mapper owns the long-term graph and feeds it from successive sessions
 * through the STG / WG / LTG hierarchy: every new session node is matched
 * against the working graph and either merged into an existing LTG node
 * or inserted with its edges.
 */
class Mapper
{
public:
    explicit Mapper(MapperConfig config = {});

    void BeginSession(const StreamHeader& header);
    /* Processes one frame and runs the hierarchy update every hierarchyStride frames */
    FrameReport ProcessFrame(const DetectionFrame& frame);
    HierarchyReport UpdateHierarchy();
    /* Final hierarchy update for nodes still undecided */
    HierarchyReport EndSession();

    LocalizationResult Relocalize() const;

    const SemanticGraph& ltg() const { return mLtg; }
    const SessionTracker& session() const { return mSession; }
    const MapperConfig& config() const { return mConfig; }

    std::optional<NodeId> Binding(NodeId sessionNode) const;
    const std::map<NodeId, NodeId>& bindings() const { return mBindings; }

    /* Installs a previously built LTG (e.g. loaded from disk) */
    void SetLtg(SemanticGraph ltg);

private:
    NodeId Insert(NodeId sessionNode);
    void Merge(NodeId sessionNode, NodeId ltgNode);
    std::size_t SyncEdges();
    const SceneDescriptor& LtgDescriptor(NodeId id);
    void Invalidate(NodeId a, NodeId b);

    MapperConfig mConfig;
    SemanticGraph mLtg;
    bool mHaveClassTable = false;
    SessionTracker mSession;
    std::map<NodeId, NodeId> mBindings;       // session -> LTG, this session
    std::set<NodeId> mUndecided;
    std::set<NodeId> mInserted;               // session nodes that became new LTG nodes
    DescriptorIndex mLtgDescriptors;          // cache, entries dropped when edges change
    std::set<std::pair<NodeId, NodeId>> mPendingEdges;
    std::size_t mFramesSinceUpdate = 0;
};

} // namespace oltsm
