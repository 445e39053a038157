#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "oltsm/descriptor.hpp"
#include "oltsm/graph.hpp"

namespace oltsm {

struct MatchConfig
{
    double tauAccept = 0.6;     // scene score needed to accept a localization
    double duplicateGate = 0.5; // meters, Euclidean "same node" gate
    int pathLength = 3;         // nodes per descriptor path
    int queryRadius = 5;        // hops of query context around each query node

    /* Throws InvalidArgument when out of range */
    void Validate() const;
    DescriptorConfig Descriptor() const { return { pathLength, 0, 0 }; }
};

/* Euclidean distance constraint between two points of the same frame */
struct GateResult
{
    double distance = 0.0;
    bool same = false;
};
GateResult EuclideanGate(const Vec3& a, const Vec3& b, double gate);

/* Cosine of the angle between u and v. Two zero vectors (padding against
 * padding) give 1, a single zero vector gives 0. */
double DirectionCosine(const Vec3& u, const Vec3& v);

/* Normalized dot product of two aligned vector groups. Empty groups give 0,
 * two all-zero groups give 1. Throws InvalidArgument on length mismatch. */
double DescriptorSimilarity(std::span<const Vec3> m, std::span<const Vec3> n);

struct PathPair
{
    std::size_t query;
    std::size_t db;
    double cosine;  // DescriptorSimilarity over the two paths' vectors
};

/*
 * Pairs paths whose class-sequence codes are equal, one-to-one and maximal
 * within each code. Higher path cosine wins, then canonical order.
 * Throws InvalidArgument if the descriptors differ in path length or class count.
 */
std::vector<PathPair> MatchPaths(const SceneDescriptor& query, const SceneDescriptor& db);

struct MatchDiagnostics
{
    bool gateApplied = false;       // Euclidean constraint is used during mapping only
    std::size_t queryPaths = 0;
    std::size_t pairedPaths = 0;    // equal-code pairs before the sign constraint
    std::size_t matchedPaths = 0;   // pairs surviving the sign constraint
    double matchedFraction = 0.0;   // matchedPaths / queryPaths
    double meanCosine = 0.0;        // mean per-edge cosine over surviving pairs
    double similarity = 0.0;        // descriptor similarity over surviving pairs
    /* Mean distance between the root-incident vectors of surviving pairs;
     * infinite when nothing survives */
    double rootOffset = std::numeric_limits<double>::infinity();
};

struct NodeMatch
{
    NodeId query = kInvalidNode;
    NodeId db = kInvalidNode;
    double score = 0.0;
    MatchDiagnostics diagnostics;
};

/* Scores one candidate: matched fraction x max(similarity, 0) */
NodeMatch ScoreCandidate(const SceneDescriptor& query, const SceneDescriptor& candidate);

/*
 * Ranks every database node with the query's root class and at least one
 * surviving path pair, best first (ties by ascending db id). `allow`, when
 * set, filters candidate ids.
 */
std::vector<NodeMatch> MatchNode(const SceneDescriptor& query,
                                 const DescriptorIndex& database,
                                 const std::function<bool(NodeId)>& allow = {});

struct LocalizationResult
{
    std::vector<NodeMatch> matches;   // best match per query node, ranked
    bool accepted = false;
    double sceneScore = 0.0;
};

/* Per-node wall-clock samples, milliseconds */
struct StageTimes
{
    std::vector<double> descriptorMs;
    std::vector<double> matchingMs;
};

/* Localizes the given query nodes against a database graph whose descriptors
 * are already extracted. Throws InvalidArgument for an empty query. */
LocalizationResult Localize(const SemanticGraph& query,
                            std::span<const NodeId> queryNodes,
                            const DescriptorIndex& database,
                            const MatchConfig& config,
                            StageTimes* times = nullptr);

/* Localizes every node of the query graph against db */
LocalizationResult Localize(const SemanticGraph& query,
                            const SemanticGraph& db,
                            const MatchConfig& config);

} // namespace oltsm
