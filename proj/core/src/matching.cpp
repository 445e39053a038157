#include "oltsm/matching.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "oltsm/error.hpp"

namespace oltsm {

namespace {

using Clock = std::chrono::steady_clock;

double Milliseconds(Clock::duration d)
{
    return std::chrono::duration<double, std::milli>(d).count();
}

} // namespace

void MatchConfig::Validate() const
{
    if (!(tauAccept > 0.0 && tauAccept <= 1.0))
        throw InvalidArgument("tau_accept must lie in (0, 1]");
    if (!(duplicateGate > 0.0))
        throw InvalidArgument("duplicate_gate must be positive");
    if (pathLength < 2)
        throw InvalidArgument("path length R must be at least 2");
    if (queryRadius < pathLength - 1)
        throw InvalidArgument("query_radius must be at least R - 1");
}

GateResult EuclideanGate(const Vec3& a, const Vec3& b, double gate)
{
    const double distance = (a - b).norm();
    return { distance, distance < gate };
}

double DirectionCosine(const Vec3& u, const Vec3& v)
{
    const double uu = u.squaredNorm();
    const double vv = v.squaredNorm();
    if (uu == 0.0 && vv == 0.0)
        return 1.0;
    if (uu == 0.0 || vv == 0.0)
        return 0.0;
    return u.dot(v) / std::sqrt(uu * vv);
}

double DescriptorSimilarity(std::span<const Vec3> m, std::span<const Vec3> n)
{
    if (m.size() != n.size())
        throw InvalidArgument("vector groups differ in length");
    if (m.empty())
        return 0.0;

    double dot = 0.0;
    double mm = 0.0;
    double nn = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        dot += m[i].dot(n[i]);
        mm += m[i].squaredNorm();
        nn += n[i].squaredNorm();
    }
    if (mm == 0.0 && nn == 0.0)
        return 1.0;
    if (mm == 0.0 || nn == 0.0)
        return 0.0;
    /* sqrt(mm * nn) keeps S(M, M) == 1 and S(M, N) == S(N, M) exactly */
    return dot / std::sqrt(mm * nn);
}

std::vector<PathPair> MatchPaths(const SceneDescriptor& query, const SceneDescriptor& db)
{
    if (query.pathLength != db.pathLength || query.classCount != db.classCount)
        throw InvalidArgument("descriptors were built with different R or class count");

    std::vector<PathPair> pairs;
    std::vector<PathPair> candidates;

    /* Both sides are sorted by code, so equal codes form aligned runs */
    std::size_t qi = 0;
    std::size_t di = 0;
    while (qi < query.desS.size() && di < db.desS.size()) {
        const auto qc = query.desS[qi];
        const auto dc = db.desS[di];
        if (qc < dc) {
            ++qi;
            continue;
        }
        if (dc < qc) {
            ++di;
            continue;
        }

        std::size_t qEnd = qi;
        while (qEnd < query.desS.size() && query.desS[qEnd] == qc)
            ++qEnd;
        std::size_t dEnd = di;
        while (dEnd < db.desS.size() && db.desS[dEnd] == dc)
            ++dEnd;

        candidates.clear();
        for (std::size_t q = qi; q < qEnd; ++q)
            for (std::size_t d = di; d < dEnd; ++d)
                candidates.push_back({ q, d, DescriptorSimilarity(query.Vectors(q), db.Vectors(d)) });

        std::stable_sort(candidates.begin(), candidates.end(),
                         [](const PathPair& lhs, const PathPair& rhs) {
                             return lhs.cosine > rhs.cosine;
                         });

        std::vector<bool> qUsed(qEnd - qi, false);
        std::vector<bool> dUsed(dEnd - di, false);
        for (const auto& c : candidates) {
            if (qUsed[c.query - qi] || dUsed[c.db - di])
                continue;
            qUsed[c.query - qi] = true;
            dUsed[c.db - di] = true;
            pairs.push_back(c);
        }

        qi = qEnd;
        di = dEnd;
    }

    std::sort(pairs.begin(), pairs.end(), [](const PathPair& lhs, const PathPair& rhs) {
        return lhs.query < rhs.query;
    });
    return pairs;
}

NodeMatch ScoreCandidate(const SceneDescriptor& query, const SceneDescriptor& candidate)
{
    NodeMatch match;
    match.query = query.root;
    match.db = candidate.root;
    match.diagnostics.queryPaths = query.PathCount();

    const auto pairs = MatchPaths(query, candidate);
    match.diagnostics.pairedPaths = pairs.size();

    std::vector<Vec3> m;
    std::vector<Vec3> n;
    double cosineSum = 0.0;
    std::size_t cosineCount = 0;
    double offsetSum = 0.0;

    for (const auto& pair : pairs) {
        const auto qv = query.Vectors(pair.query);
        const auto dv = candidate.Vectors(pair.db);

        /* Corresponding edges must face the same way */
        bool sameWay = true;
        double pairCosines = 0.0;
        for (std::size_t e = 0; e < qv.size(); ++e) {
            const double c = DirectionCosine(qv[e], dv[e]);
            if (c < 0.0) {
                sameWay = false;
                break;
            }
            pairCosines += c;
        }
        if (!sameWay)
            continue;

        ++match.diagnostics.matchedPaths;
        offsetSum += (qv[0] - dv[0]).norm();
        cosineSum += pairCosines;
        cosineCount += qv.size();
        m.insert(m.end(), qv.begin(), qv.end());
        n.insert(n.end(), dv.begin(), dv.end());
    }

    if (match.diagnostics.matchedPaths == 0)
        return match;

    match.diagnostics.matchedFraction =
        static_cast<double>(match.diagnostics.matchedPaths) /
        static_cast<double>(match.diagnostics.queryPaths);
    match.diagnostics.meanCosine = cosineCount > 0 ? cosineSum / cosineCount : 0.0;
    match.diagnostics.rootOffset = offsetSum / static_cast<double>(match.diagnostics.matchedPaths);
    match.diagnostics.similarity = DescriptorSimilarity(m, n);
    match.score = match.diagnostics.matchedFraction * std::max(match.diagnostics.similarity, 0.0);
    return match;
}

std::vector<NodeMatch> MatchNode(const SceneDescriptor& query,
                                 const DescriptorIndex& database,
                                 const std::function<bool(NodeId)>& allow)
{
    std::vector<NodeMatch> ranked;
    for (const auto& [id, candidate] : database) {
        if (candidate.rootClass != query.rootClass)
            continue;
        if (allow && !allow(id))
            continue;
        auto match = ScoreCandidate(query, candidate);
        if (match.diagnostics.matchedPaths == 0)
            continue;
        ranked.push_back(match);
    }

    std::sort(ranked.begin(), ranked.end(), [](const NodeMatch& lhs, const NodeMatch& rhs) {
        if (lhs.score != rhs.score)
            return lhs.score > rhs.score;
        return lhs.db < rhs.db;
    });
    return ranked;
}

LocalizationResult Localize(const SemanticGraph& query,
                            std::span<const NodeId> queryNodes,
                            const DescriptorIndex& database,
                            const MatchConfig& config,
                            StageTimes* times)
{
    config.Validate();
    if (queryNodes.empty())
        throw InvalidArgument("localization needs at least one query node");

    LocalizationResult result;
    if (database.empty())
        return result;

    /* Paths of R nodes never leave the (R - 1)-hop ball around their root,
     * so with query_radius >= R - 1 extracting on the whole query graph
     * equals extracting on the query_radius neighbourhood. */
    const auto descriptorConfig = config.Descriptor();

    double weighted = 0.0;
    double weights = 0.0;
    for (const NodeId root : queryNodes) {
        const auto t0 = Clock::now();
        const auto descriptor = ExtractDescriptor(query, root, descriptorConfig);
        const auto t1 = Clock::now();
        const auto ranked = MatchNode(descriptor, database);
        if (times) {
            times->descriptorMs.push_back(Milliseconds(t1 - t0));
            times->matchingMs.push_back(Milliseconds(Clock::now() - t1));
        }
        if (ranked.empty()) {
            weights += 1.0;
            continue;
        }
        const auto& best = ranked.front();
        weighted += best.diagnostics.matchedFraction * best.score;
        weights += best.diagnostics.matchedFraction;
        result.matches.push_back(best);
    }

    std::sort(result.matches.begin(), result.matches.end(),
              [](const NodeMatch& lhs, const NodeMatch& rhs) {
                  if (lhs.score != rhs.score)
                      return lhs.score > rhs.score;
                  return lhs.query < rhs.query;
              });

    result.sceneScore = weights > 0.0 ? weighted / weights : 0.0;
    result.accepted = result.sceneScore >= config.tauAccept;
    return result;
}

LocalizationResult Localize(const SemanticGraph& query,
                            const SemanticGraph& db,
                            const MatchConfig& config)
{
    std::vector<NodeId> roots;
    for (const auto& [id, node] : query.nodes())
        roots.push_back(id);
    const auto database = ExtractAll(db, config.Descriptor());
    return Localize(query, roots, database, config);
}

} // namespace oltsm
