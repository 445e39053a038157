#include "oltsm/mapping.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include "oltsm/error.hpp"

namespace oltsm {

namespace {

double Median(std::vector<double> values)
{
    const std::size_t mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + mid, values.end());
    const double upper = values[mid];
    if (values.size() % 2 == 1)
        return upper;
    const double lower = *std::max_element(values.begin(), values.begin() + mid);
    return 0.5 * (lower + upper);
}

std::pair<NodeId, NodeId> EdgeKey(NodeId a, NodeId b)
{
    return a < b ? std::make_pair(a, b) : std::make_pair(b, a);
}

} // namespace

void AssociationConfig::Validate() const
{
    if (!(gateDistance > 0.0))
        throw InvalidArgument("gate_distance must be positive");
    if (!(edgeMaxDistance >= gateDistance))
        throw InvalidArgument("edge_max_distance must be at least gate_distance");
    if (!(minConfidence >= 0.0 && minConfidence <= 1.0))
        throw InvalidArgument("min_confidence must lie in [0, 1]");
    if (minHits < 1 || trackFrames < 1 || tentativeFrames < 1)
        throw InvalidArgument("min_hits, track_frames and tentative_frames must be positive");
}

void MapperConfig::Validate() const
{
    association.Validate();
    match.Validate();
    if (!(tauMap > 0.0 && tauMap <= 1.0))
        throw InvalidArgument("tau_map must lie in (0, 1]");
    if (!(mergeGate > 0.0))
        throw InvalidArgument("merge gate must be positive");
    if (hierarchyStride < 1)
        throw InvalidArgument("hierarchy stride must be positive");
    if (workingRadius < 1)
        throw InvalidArgument("working graph radius must be positive");
}

SessionTracker::SessionTracker(AssociationConfig config, double duplicateGate,
                               std::size_t stgCapacity) :
    mConfig(std::move(config)),
    mDuplicateGate(duplicateGate),
    mStg(stgCapacity)
{
    this->mConfig.Validate();
    if (!(duplicateGate > 0.0))
        throw InvalidArgument("duplicate gate must be positive");
}

void SessionTracker::Begin(const StreamHeader& header)
{
    if (header.classes.empty())
        throw InvalidArgument("session needs a non-empty class table");

    this->mHeader = header;
    this->mStarted = true;
    this->mGraph = SemanticGraph(header.classes);
    this->mStg.Clear();
    this->mTracks.clear();
    this->mCenterCounts.clear();
    this->mRobot = Vec3::Zero();
    this->mFrameIndex = 0;
    this->mLastTimestamp.reset();
}

void SessionTracker::Track::Vote(ClassId c)
{
    ++this->hits;
    ++this->votes[c];
    /* Tentative tracks follow the class majority; ties keep the current class */
    if (this->node == kInvalidNode && this->votes[c] > this->votes[this->classId])
        this->classId = c;
}

bool SessionTracker::IsTracked(NodeId node) const
{
    return std::any_of(this->mTracks.begin(), this->mTracks.end(),
                       [node](const Track& t) { return t.node == node; });
}

std::optional<MagneticPoint> SessionTracker::TrackedPosition(NodeId node) const
{
    for (const auto& track : this->mTracks)
        if (track.node == node)
            return MagneticPoint(track.rel);
    return std::nullopt;
}

std::vector<std::pair<std::size_t, std::size_t>>
SessionTracker::Associate(const std::vector<Candidate>& candidates, const Vec3& shift) const
{
    /* (distance, track, candidate) for every same-class pair inside the gate */
    std::vector<std::tuple<double, std::size_t, std::size_t>> options;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        for (std::size_t t = 0; t < this->mTracks.size(); ++t) {
            const auto& track = this->mTracks[t];
            if (track.classId != candidates[c].classId)
                continue;
            const auto gate = EuclideanGate(candidates[c].rel, track.rel + shift,
                                            this->mConfig.gateDistance);
            if (gate.same)
                options.emplace_back(gate.distance, t, c);
        }
    }
    std::sort(options.begin(), options.end());

    std::vector<bool> trackUsed(this->mTracks.size(), false);
    std::vector<bool> candidateUsed(candidates.size(), false);
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (const auto& [distance, t, c] : options) {
        if (trackUsed[t] || candidateUsed[c])
            continue;
        trackUsed[t] = true;
        candidateUsed[c] = true;
        pairs.emplace_back(c, t);
    }
    return pairs;
}

NodeId SessionTracker::CreateNode(Track& track, FrameReport& report)
{
    LandmarkNode node;
    node.classId = track.classId;
    node.center = this->mRobot + track.rel;
    if (track.color)
        node.attrs.emplace("color", *track.color);

    const NodeId id = this->mGraph.AddNode(std::move(node));
    track.node = id;
    this->mCenterCounts[id] = 1;

    /* Edges to short-term members whose robot-centric position is known */
    const MagneticPoint here(track.rel);
    for (const NodeId member : this->mStg.ids()) {
        const auto there = this->TrackedPosition(member);
        if (!there)
            continue;
        const Vec3 dvec = RelativeDirection(*there, here);
        if (dvec.norm() > this->mConfig.edgeMaxDistance)
            continue;
        this->mGraph.AddEdge(member, id, dvec);
        report.newEdges.emplace_back(member, id);
    }

    this->mStg.Push(id);
    report.newNodes.push_back(id);
    return id;
}

FrameReport SessionTracker::ProcessFrame(const DetectionFrame& frame)
{
    if (!this->mStarted)
        throw InvalidArgument("no session extrinsics loaded; begin a session first");
    if (this->mLastTimestamp && !(frame.timestamp > *this->mLastTimestamp))
        throw DataError("out-of-order timestamp " + std::to_string(frame.timestamp));
    this->mLastTimestamp = frame.timestamp;
    const std::size_t frameIndex = this->mFrameIndex++;

    FrameReport report;
    report.status.assign(frame.observations.size(), ObservationStatus::Filtered);
    report.assignment.assign(frame.observations.size(), kInvalidNode);

    std::vector<Candidate> candidates;
    for (std::size_t i = 0; i < frame.observations.size(); ++i) {
        const auto& obs = frame.observations[i];
        if (obs.confidence < this->mConfig.minConfidence || !this->mConfig.IsStatic(obs.classId))
            continue;
        if (obs.classId >= this->mHeader.classes.size())
            throw DataError("observation class " + std::to_string(obs.classId) +
                            " outside the session class table");
        const auto body = CameraToBody(obs.centerCam, this->mHeader.extrinsics);
        const auto mag = BodyToMagnetic(body, frame.yaw);
        candidates.push_back({ i, obs.classId, mag.v, std::hypot(mag.x(), mag.y()) });
    }

    /*
     * Static landmarks keep their magnetic-frame offsets, so every tracked
     * landmark moves by the same robot-centric displacement as the anchors
     * re-observed in this frame. First pass assumes no motion, second pass
     * re-gates with the median anchor displacement.
     */
    auto displacement = [&](const auto& pairs) {
        std::vector<double> dx, dy, dz;
        for (const auto& [c, t] : pairs) {
            const Vec3 d = candidates[c].rel - this->mTracks[t].rel;
            dx.push_back(d.x());
            dy.push_back(d.y());
            dz.push_back(d.z());
        }
        return Vec3(Median(dx), Median(dy), Median(dz));
    };

    Vec3 shift = Vec3::Zero();
    auto pairs = this->Associate(candidates, shift);
    if (!pairs.empty()) {
        shift = displacement(pairs);
        auto refined = this->Associate(candidates, shift);
        if (!refined.empty()) {
            pairs = std::move(refined);
            shift = displacement(pairs);
        }
    }

    for (auto& track : this->mTracks)
        track.rel += shift;
    this->mRobot -= shift;

    std::vector<bool> associated(candidates.size(), false);
    for (const auto& [c, t] : pairs) {
        auto& track = this->mTracks[t];
        const auto& obs = frame.observations[candidates[c].obs];
        associated[c] = true;
        track.rel = candidates[c].rel;
        track.lastSeen = frameIndex;
        track.Vote(obs.classId);
        if (obs.color && !track.color)
            track.color = obs.color;

        if (track.node == kInvalidNode) {
            report.status[candidates[c].obs] = ObservationStatus::Tentative;
            continue;
        }
        auto& node = this->mGraph.MutableNode(track.node);
        auto& count = this->mCenterCounts[track.node];
        node.center = (node.center * static_cast<double>(count) + this->mRobot + track.rel) /
                      static_cast<double>(count + 1);
        ++count;
        report.status[candidates[c].obs] = ObservationStatus::Matched;
        report.assignment[candidates[c].obs] = track.node;
        report.matchedNodes.push_back(track.node);
    }

    /* Leftover observations start tentative tracks, nearest first, unless
     * they duplicate something already tracked */
    std::vector<std::size_t> leftovers;
    for (std::size_t c = 0; c < candidates.size(); ++c)
        if (!associated[c])
            leftovers.push_back(c);
    std::sort(leftovers.begin(), leftovers.end(), [&](std::size_t lhs, std::size_t rhs) {
        return std::tie(candidates[lhs].range, candidates[lhs].obs) <
               std::tie(candidates[rhs].range, candidates[rhs].obs);
    });

    std::vector<std::pair<std::size_t, std::size_t>> fresh;  // (track, observation)
    for (const std::size_t c : leftovers) {
        const auto& cand = candidates[c];
        /* Another class at the position of a track: a confused detection of
         * the tracked object, not a new landmark */
        Track* nearest = nullptr;
        double best = this->mDuplicateGate;
        for (auto& t : this->mTracks) {
            const auto gate = EuclideanGate(cand.rel, t.rel, best);
            if (gate.same) {
                best = gate.distance;
                nearest = &t;
            }
        }
        if (nearest) {
            if (nearest->lastSeen != frameIndex) {
                nearest->lastSeen = frameIndex;
                nearest->Vote(cand.classId);
            }
            report.status[cand.obs] = ObservationStatus::Duplicate;
            continue;
        }
        Track track;
        track.classId = cand.classId;
        track.rel = cand.rel;
        track.lastSeen = frameIndex;
        track.Vote(cand.classId);
        track.color = frame.observations[cand.obs].color;
        this->mTracks.push_back(std::move(track));
        fresh.emplace_back(this->mTracks.size() - 1, cand.obs);
        report.status[cand.obs] = ObservationStatus::Tentative;
    }

    /* Promote tracks seen often enough, nearest first */
    std::vector<std::pair<std::size_t, std::size_t>> promote;  // (track, observation)
    for (const auto& [c, t] : pairs)
        if (this->mTracks[t].node == kInvalidNode && this->mTracks[t].hits >= this->mConfig.minHits)
            promote.emplace_back(t, candidates[c].obs);
    for (const auto& [t, obs] : fresh)
        if (this->mTracks[t].hits >= this->mConfig.minHits)
            promote.emplace_back(t, obs);
    std::sort(promote.begin(), promote.end(), [&](const auto& lhs, const auto& rhs) {
        const double lr = std::hypot(this->mTracks[lhs.first].rel.x(), this->mTracks[lhs.first].rel.y());
        const double rr = std::hypot(this->mTracks[rhs.first].rel.x(), this->mTracks[rhs.first].rel.y());
        return std::tie(lr, lhs.second) < std::tie(rr, rhs.second);
    });
    for (const auto& [t, obs] : promote) {
        const NodeId id = this->CreateNode(this->mTracks[t], report);
        report.status[obs] = ObservationStatus::Created;
        report.assignment[obs] = id;
    }

    /* Forget tracks that have been out of sight for too long */
    std::erase_if(this->mTracks, [&](const Track& t) {
        const std::size_t unseen = frameIndex - t.lastSeen;
        const int limit = t.node == kInvalidNode ? this->mConfig.tentativeFrames
                                                 : this->mConfig.trackFrames;
        return unseen > static_cast<std::size_t>(limit);
    });

    report.robotPosition = MagneticPoint(this->mRobot);
    return report;
}

SemanticGraph BuildWorkingGraph(const SemanticGraph& ltg, std::span<const NodeId> roots, int radius)
{
    std::set<NodeId> ids;
    for (const NodeId root : roots) {
        if (!ltg.HasNode(root))
            continue;
        ids.insert(root);
        for (const auto& entry : ltg.Neighbors(root, radius))
            ids.insert(entry.id);
    }
    return ltg.InducedSubgraph(ids);
}

LocalizationResult Relocalize(const SessionTracker& session,
                              const DescriptorIndex& database,
                              const MatchConfig& config)
{
    if (session.stg().Empty())
        throw InvalidArgument("not enough context: the short-term graph is empty");

    /* The session graph stands in for the query_radius neighbourhood of the
     * STG; descriptors only reach R - 1 <= query_radius hops */
    std::vector<NodeId> roots(session.stg().ids().begin(), session.stg().ids().end());
    return Localize(session.graph(), roots, database, config);
}

Mapper::Mapper(MapperConfig config) :
    mConfig(std::move(config)),
    mSession(mConfig.association, mConfig.match.duplicateGate)
{
    this->mConfig.Validate();
}

void Mapper::SetLtg(SemanticGraph ltg)
{
    this->mLtg = std::move(ltg);
    this->mHaveClassTable = true;
    this->mBindings.clear();
    this->mUndecided.clear();
    this->mInserted.clear();
    this->mPendingEdges.clear();
    this->mLtgDescriptors.clear();
}

void Mapper::BeginSession(const StreamHeader& header)
{
    if (!this->mHaveClassTable) {
        this->mLtg = SemanticGraph(header.classes);
        this->mHaveClassTable = true;
    } else if (this->mLtg.classTable() != header.classes) {
        throw DataError("session class table differs from the map's class table");
    }

    this->mSession.Begin(header);
    this->mBindings.clear();
    this->mUndecided.clear();
    this->mInserted.clear();
    this->mPendingEdges.clear();
    this->mFramesSinceUpdate = 0;
}

FrameReport Mapper::ProcessFrame(const DetectionFrame& frame)
{
    auto report = this->mSession.ProcessFrame(frame);
    this->mUndecided.insert(report.newNodes.begin(), report.newNodes.end());
    for (const auto& [a, b] : report.newEdges)
        this->mPendingEdges.insert(EdgeKey(a, b));

    if (++this->mFramesSinceUpdate >= static_cast<std::size_t>(this->mConfig.hierarchyStride)) {
        this->UpdateHierarchy();
        this->mFramesSinceUpdate = 0;
    }
    return report;
}

std::optional<NodeId> Mapper::Binding(NodeId sessionNode) const
{
    const auto it = this->mBindings.find(sessionNode);
    if (it == this->mBindings.end())
        return std::nullopt;
    return it->second;
}

NodeId Mapper::Insert(NodeId sessionNode)
{
    LandmarkNode node = this->mSession.graph().Node(sessionNode);
    node.id = kInvalidNode;
    const NodeId id = this->mLtg.AddNode(std::move(node));
    this->mBindings[sessionNode] = id;
    this->mInserted.insert(sessionNode);
    return id;
}

void Mapper::Merge(NodeId sessionNode, NodeId ltgNode)
{
    const auto& incoming = this->mSession.graph().Node(sessionNode);
    auto& node = this->mLtg.MutableNode(ltgNode);

    double views = 1.0;
    if (const auto it = node.attrs.find("views"); it != node.attrs.end())
        if (const auto* n = std::get_if<double>(&it->second))
            views = *n;
    node.center = (node.center * views + incoming.center) / (views + 1.0);
    node.attrs["views"] = views + 1.0;
    for (const auto& [key, value] : incoming.attrs)
        node.attrs.emplace(key, value);

    this->mBindings[sessionNode] = ltgNode;
}

std::size_t Mapper::SyncEdges()
{
    std::size_t added = 0;
    const auto& session = this->mSession.graph();
    for (auto it = this->mPendingEdges.begin(); it != this->mPendingEdges.end();) {
        const auto la = this->Binding(it->first);
        const auto lb = this->Binding(it->second);
        if (!la || !lb) {
            ++it;
            continue;
        }
        const auto& edge = session.Edge(it->first, it->second);
        const NodeId from = this->mBindings.at(edge.a);
        const NodeId to = this->mBindings.at(edge.b);
        if (from != to && !this->mLtg.HasEdge(from, to)) {
            this->mLtg.AddEdge(from, to, edge.dvec, edge.attrs);
            this->Invalidate(from, to);
            ++added;
        }
        it = this->mPendingEdges.erase(it);
    }
    return added;
}

const SceneDescriptor& Mapper::LtgDescriptor(NodeId id)
{
    auto it = this->mLtgDescriptors.find(id);
    if (it == this->mLtgDescriptors.end())
        it = this->mLtgDescriptors.emplace(
            id, ExtractDescriptor(this->mLtg, id, this->mConfig.match.Descriptor())).first;
    return it->second;
}

void Mapper::Invalidate(NodeId a, NodeId b)
{
    /* A path of R nodes starting at u can only use the new edge when u lies
     * within R - 1 hops of one of its endpoints */
    const int hops = this->mConfig.match.pathLength - 1;
    for (const NodeId end : { a, b }) {
        this->mLtgDescriptors.erase(end);
        for (const auto& entry : this->mLtg.Neighbors(end, hops))
            this->mLtgDescriptors.erase(entry.id);
    }
}

HierarchyReport Mapper::UpdateHierarchy()
{
    HierarchyReport report;
    if (this->mUndecided.empty()) {
        report.edgesAdded = this->SyncEdges();
        return report;
    }

    /* Working graph around the STG members merged into the LTG; with no such
     * anchor, fall back to the whole LTG */
    std::vector<NodeId> roots;
    for (const NodeId id : this->mSession.stg().ids())
        if (const auto bound = this->Binding(id); bound && !this->mInserted.count(id))
            roots.push_back(*bound);

    std::vector<NodeId> workingIds;
    if (!roots.empty()) {
        const auto working = BuildWorkingGraph(this->mLtg, roots, this->mConfig.workingRadius);
        for (const auto& [id, node] : working.nodes())
            workingIds.push_back(id);
    } else if (!this->mLtg.Empty()) {
        for (const auto& [id, node] : this->mLtg.nodes())
            workingIds.push_back(id);
        report.relocalized = true;
    }
    report.workingGraphNodes = workingIds.size();

    /* Descriptors come from the full LTG, not the induced working graph, so
     * that border nodes keep their complete neighbourhood */
    DescriptorIndex working;
    for (const NodeId id : workingIds)
        working.emplace(id, this->LtgDescriptor(id));

    /* An LTG node already bound to a landmark that is still in sight is a
     * different physical object */
    std::set<NodeId> taken;
    for (const auto& [sessionNode, ltgNode] : this->mBindings)
        if (this->mSession.IsTracked(sessionNode))
            taken.insert(ltgNode);
    const auto allow = [&taken](NodeId id) { return taken.count(id) == 0; };

    /* Session nodes already known to be new cannot appear in the LTG, so
     * paths through them are left out of the query context */
    std::set<NodeId> context;
    for (const auto& [id, node] : this->mSession.graph().nodes())
        if (!this->mInserted.count(id))
            context.insert(id);
    const SemanticGraph query = this->mSession.graph().InducedSubgraph(context);

    const auto descriptorConfig = this->mConfig.match.Descriptor();
    for (const NodeId node : this->mUndecided) {
        if (!working.empty()) {
            const auto descriptor = ExtractDescriptor(query, node, descriptorConfig);
            const auto ranked = MatchNode(descriptor, working, allow);
            /* Relative vectors between static landmarks do not change across
             * sessions, so the right node also agrees on where its neighbours are */
            const auto accepted = std::find_if(ranked.begin(), ranked.end(), [&](const NodeMatch& m) {
                return m.score < this->mConfig.tauMap || m.diagnostics.rootOffset < this->mConfig.mergeGate;
            });
            if (accepted != ranked.end() && accepted->score >= this->mConfig.tauMap) {
                this->Merge(node, accepted->db);
                taken.insert(accepted->db);
                report.merged.emplace_back(node, accepted->db);
                continue;
            }
        }
        report.inserted.emplace_back(node, this->Insert(node));
    }
    this->mUndecided.clear();

    report.edgesAdded = this->SyncEdges();
    return report;
}

HierarchyReport Mapper::EndSession()
{
    auto report = this->UpdateHierarchy();
    this->mFramesSinceUpdate = 0;
    return report;
}

LocalizationResult Mapper::Relocalize() const
{
    const auto database = ExtractAll(this->mLtg, this->mConfig.match.Descriptor());
    return oltsm::Relocalize(this->mSession, database, this->mConfig.match);
}

} // namespace oltsm
