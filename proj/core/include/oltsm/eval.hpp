#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "oltsm/graph.hpp"
#include "oltsm/matching.hpp"

namespace oltsm {

struct LabeledScore
{
    double score = 0.0;
    bool positive = false;
};

struct PrPoint
{
    double threshold = 0.0;
    double precision = 1.0;
    double recall = 0.0;
};

/* Node id -> ground-truth landmark id (-1: distractor) */
using NodeLandmarks = std::map<NodeId, int>;

/*
 * Majority landmark of every node, from per-frame node assignments and the
 * matching per-frame ground-truth labels. Ties go to the smaller landmark id.
 * Throws DataError when the two do not line up.
 */
NodeLandmarks VoteNodeLandmarks(const std::vector<std::vector<NodeId>>& assignments,
                                const std::vector<std::vector<int>>& labels);

struct LabeledMatches
{
    std::vector<LabeledScore> scores;
    std::size_t positives = 0;  // query nodes whose landmark exists in the database
};

/*
 * Labels every top-1 match: positive iff query and database node see the
 * same landmark. Throws InvalidArgument when a matched node has no oracle
 * entry. `roots` are the query nodes that were localized.
 */
LabeledMatches ScoreCorrespondences(const LocalizationResult& result,
                                    std::span<const NodeId> roots,
                                    const NodeLandmarks& queryOracle,
                                    const NodeLandmarks& dbOracle);

/*
 * Precision/recall at every unique score threshold, thresholds descending,
 * preceded by the (threshold +inf, precision 1, recall 0) anchor. A score
 * is predicted positive when score >= threshold. `positives` defaults to the
 * number of positive labels. Throws InvalidArgument on empty input.
 */
std::vector<PrPoint> PrCurve(std::span<const LabeledScore> scores,
                             std::optional<std::size_t> positives = std::nullopt);

/* Trapezoidal area over recall. Throws InvalidArgument for fewer than two points. */
double Auc(std::span<const PrPoint> curve);

struct QueryOutcome
{
    bool accepted = false;
    bool topCorrect = false;
};

/* Fraction of queries accepted with a correct best match. Throws
 * InvalidArgument on empty input. */
double SuccessRate(std::span<const QueryOutcome> outcomes);

/* Byte count of a serialized map file. Throws DataError when missing. */
std::uintmax_t MapStorageBytes(const std::filesystem::path& path);

struct StageStats
{
    double medianMs = 0.0;
    double p95Ms = 0.0;
    std::size_t samples = 0;
};

struct TimingReport
{
    StageStats descriptor;
    StageStats matching;
    StageStats total;
};

/* Median and nearest-rank p95 after dropping the first `warmup` samples
 * (all samples are kept when there are not more than `warmup`) */
StageStats Summarize(std::span<const double> samplesMs, std::size_t warmup = 10);

void WritePrCsv(std::span<const PrPoint> curve, std::ostream& out);
void WritePrCsv(std::span<const PrPoint> curve, const std::filesystem::path& path);

nlohmann::json TimingToJson(const TimingReport& timing);

} // namespace oltsm
