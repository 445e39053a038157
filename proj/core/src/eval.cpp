#include "oltsm/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include "oltsm/canonical_json.hpp"
#include "oltsm/error.hpp"

namespace oltsm {

NodeLandmarks VoteNodeLandmarks(const std::vector<std::vector<NodeId>>& assignments,
                                const std::vector<std::vector<int>>& labels)
{
    if (assignments.size() != labels.size())
        throw DataError("association and ground truth cover different frame counts");

    std::map<NodeId, std::map<int, std::size_t>> votes;
    for (std::size_t f = 0; f < assignments.size(); ++f) {
        if (assignments[f].size() != labels[f].size())
            throw DataError("association and ground truth disagree on frame " + std::to_string(f));
        for (std::size_t i = 0; i < assignments[f].size(); ++i)
            if (assignments[f][i] != kInvalidNode)
                ++votes[assignments[f][i]][labels[f][i]];
    }

    NodeLandmarks result;
    for (const auto& [node, tally] : votes) {
        /* std::map iterates ascending, so a strict comparison keeps the smaller id on ties */
        auto best = tally.begin();
        for (auto it = tally.begin(); it != tally.end(); ++it)
            if (it->second > best->second)
                best = it;
        result[node] = best->first;
    }
    return result;
}

LabeledMatches ScoreCorrespondences(const LocalizationResult& result,
                                    std::span<const NodeId> roots,
                                    const NodeLandmarks& queryOracle,
                                    const NodeLandmarks& dbOracle)
{
    auto lookup = [](const NodeLandmarks& oracle, NodeId id, const char* side) {
        const auto it = oracle.find(id);
        if (it == oracle.end())
            throw InvalidArgument(std::string("no ground truth for ") + side + " node " + std::to_string(id));
        return it->second;
    };

    std::set<int> mapped;
    for (const auto& [id, landmark] : dbOracle)
        if (landmark >= 0)
            mapped.insert(landmark);

    LabeledMatches labeled;
    for (const NodeId root : roots) {
        const int landmark = lookup(queryOracle, root, "query");
        if (landmark >= 0 && mapped.count(landmark))
            ++labeled.positives;
    }
    for (const auto& match : result.matches) {
        const int q = lookup(queryOracle, match.query, "query");
        const int d = lookup(dbOracle, match.db, "database");
        labeled.scores.push_back({ match.score, q >= 0 && q == d });
    }
    return labeled;
}

std::vector<PrPoint> PrCurve(std::span<const LabeledScore> scores, std::optional<std::size_t> positives)
{
    if (scores.empty())
        throw InvalidArgument("precision-recall curve needs at least one labeled score");

    std::vector<LabeledScore> sorted(scores.begin(), scores.end());
    std::sort(sorted.begin(), sorted.end(),
              [](const LabeledScore& a, const LabeledScore& b) { return a.score > b.score; });

    std::size_t labelPositives = 0;
    for (const auto& s : sorted)
        labelPositives += s.positive ? 1 : 0;
    const std::size_t denominator = positives.value_or(labelPositives);
    if (denominator < labelPositives)
        throw InvalidArgument("ground-truth positives fewer than positive labels");

    std::vector<PrPoint> curve;
    curve.push_back({ std::numeric_limits<double>::infinity(), 1.0, 0.0 });

    std::size_t tp = 0;
    std::size_t predicted = 0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        ++predicted;
        tp += sorted[i].positive ? 1 : 0;
        if (i + 1 < sorted.size() && sorted[i + 1].score == sorted[i].score)
            continue;
        PrPoint point;
        point.threshold = sorted[i].score;
        point.precision = static_cast<double>(tp) / static_cast<double>(predicted);
        point.recall = denominator > 0 ? static_cast<double>(tp) / static_cast<double>(denominator) : 0.0;
        curve.push_back(point);
    }
    return curve;
}

double Auc(std::span<const PrPoint> curve)
{
    if (curve.size() < 2)
        throw InvalidArgument("area under a curve needs at least two points");
    double area = 0.0;
    for (std::size_t i = 1; i < curve.size(); ++i)
        area += (curve[i].recall - curve[i - 1].recall) * (curve[i].precision + curve[i - 1].precision) / 2.0;
    return std::clamp(area, 0.0, 1.0);
}

double SuccessRate(std::span<const QueryOutcome> outcomes)
{
    if (outcomes.empty())
        throw InvalidArgument("success rate needs at least one query");
    std::size_t good = 0;
    for (const auto& o : outcomes)
        good += (o.accepted && o.topCorrect) ? 1 : 0;
    return static_cast<double>(good) / static_cast<double>(outcomes.size());
}

std::uintmax_t MapStorageBytes(const std::filesystem::path& path)
{
    std::error_code ec;
    const auto size = std::filesystem::file_size(path, ec);
    if (ec)
        throw DataError("cannot stat map file " + path.string() + ": " + ec.message());
    return size;
}

StageStats Summarize(std::span<const double> samplesMs, std::size_t warmup)
{
    StageStats stats;
    if (samplesMs.empty())
        return stats;
    std::vector<double> kept = samplesMs.size() > warmup ?
        std::vector<double>(samplesMs.begin() + static_cast<std::ptrdiff_t>(warmup), samplesMs.end()) :
        std::vector<double>(samplesMs.begin(), samplesMs.end());
    std::sort(kept.begin(), kept.end());

    const std::size_t n = kept.size();
    stats.samples = n;
    stats.medianMs = n % 2 == 1 ? kept[n / 2] : (kept[n / 2 - 1] + kept[n / 2]) / 2.0;
    const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(n)));
    stats.p95Ms = kept[std::max<std::size_t>(rank, 1) - 1];
    return stats;
}

void WritePrCsv(std::span<const PrPoint> curve, std::ostream& out)
{
    out << "threshold,precision,recall\n";
    for (const auto& p : curve) {
        out << (std::isinf(p.threshold) ? std::string("inf") : FormatDouble(p.threshold, 17)) << ','
            << FormatDouble(p.precision, 17) << ',' << FormatDouble(p.recall, 17) << '\n';
    }
}

void WritePrCsv(std::span<const PrPoint> curve, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw DataError("cannot open " + path.string() + " for writing");
    WritePrCsv(curve, out);
}

nlohmann::json TimingToJson(const TimingReport& timing)
{
    auto stage = [](const StageStats& s) {
        return nlohmann::json { { "median_ms", s.medianMs }, { "p95_ms", s.p95Ms }, { "samples", s.samples } };
    };
    return { { "descriptor", stage(timing.descriptor) },
             { "matching", stage(timing.matching) },
             { "total", stage(timing.total) } };
}

} // namespace oltsm
