#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "oltsm/eval.hpp"
#include "oltsm/mapping.hpp"
#include "oltsm/simulator.hpp"

namespace oltsm {

/* Node id per (frame, observation) of one session; kInvalidNode where an
 * observation produced no node */
struct SessionAssociation
{
    std::string session;
    std::vector<std::vector<NodeId>> assignments;
};

nlohmann::json AssociationToJson(const SessionAssociation& assoc);
SessionAssociation AssociationFromJson(const nlohmann::json& doc);

struct MapBuild
{
    SemanticGraph ltg;
    std::vector<SessionAssociation> sessions;  // assignments hold LTG ids
    std::size_t maxStgSize = 0;
    std::size_t frames = 0;
};

/* Maps the sessions in order, starting from `initial` when given */
MapBuild BuildMap(std::span<const DetectionStream> sessions, const MapperConfig& config,
                  const std::optional<SemanticGraph>& initial = std::nullopt);

struct QueryRecord
{
    std::size_t frame = 0;
    std::vector<NodeId> roots;      // short-term graph at query time
    LocalizationResult result;
};

struct QueryRun
{
    std::string session;
    std::vector<QueryRecord> queries;
    SessionAssociation association; // assignments hold query session ids
    StageTimes times;
    std::vector<double> totalMs;    // per query
};

/*
 * Tracks the query stream on its own and every `stride` frames (and at the
 * last frame) localizes the current short-term graph against the map.
 */
QueryRun RunQueries(const DescriptorIndex& map, const DetectionStream& query,
                    const MapperConfig& config, int stride);

nlohmann::json MatchToJson(const NodeMatch& match);
/* Localization report; the top-level fields repeat the last query */
nlohmann::json ReportToJson(const QueryRun& run);
QueryRun ReportFromJson(const nlohmann::json& doc);

struct Evaluation
{
    std::vector<PrPoint> curve;
    double auc = 0.0;
    double successRate = 0.0;
    std::size_t queries = 0;
    std::size_t labeled = 0;
    std::size_t positives = 0;
};

/* Throws InvalidArgument when no query produced a labeled match */
Evaluation Evaluate(const QueryRun& run, const NodeLandmarks& queryOracle, const NodeLandmarks& mapOracle);

/* Map-side oracle over every mapped session */
NodeLandmarks MapOracle(const MapBuild& build, std::span<const GroundTruth> truths,
                        std::span<const DetectionStream> streams);

struct ExperimentSpec
{
    WorldSpec world;
    SessionSpec map;
    SessionSpec query;
    MapperConfig mapper;
    int queryStride = 50;
};

struct ExperimentResult
{
    World world;
    SessionPair sessions;
    MapBuild build;
    QueryRun run;
    Evaluation evaluation;
};

ExperimentResult RunExperiment(const ExperimentSpec& spec);

} // namespace oltsm
