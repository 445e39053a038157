#include "oltsm/experiment.hpp"

#include <chrono>
#include <cmath>

#include "oltsm/error.hpp"

namespace oltsm {

namespace {

using Clock = std::chrono::steady_clock;

nlohmann::json NodeIdJson(NodeId id)
{
    return id == kInvalidNode ? nlohmann::json(-1) : nlohmann::json(id);
}

NodeId NodeIdFromJson(const nlohmann::json& value)
{
    const auto raw = value.get<std::int64_t>();
    return raw < 0 ? kInvalidNode : static_cast<NodeId>(raw);
}

nlohmann::json QueryToJson(const QueryRecord& q)
{
    nlohmann::json matches = nlohmann::json::array();
    for (const auto& m : q.result.matches)
        matches.push_back(MatchToJson(m));
    return { { "frame", q.frame }, { "roots", q.roots }, { "accepted", q.result.accepted },
             { "scene_score", q.result.sceneScore }, { "matches", std::move(matches) } };
}

NodeMatch MatchFromJson(const nlohmann::json& doc)
{
    NodeMatch m;
    m.query = doc.at("q").get<NodeId>();
    m.db = doc.at("db").get<NodeId>();
    m.score = doc.at("score").get<double>();
    const auto& d = doc.at("diagnostics");
    m.diagnostics.gateApplied = d.at("gate_applied").get<bool>();
    m.diagnostics.queryPaths = d.at("query_paths").get<std::size_t>();
    m.diagnostics.pairedPaths = d.at("paired_paths").get<std::size_t>();
    m.diagnostics.matchedPaths = d.at("matched_paths").get<std::size_t>();
    m.diagnostics.matchedFraction = d.at("matched_fraction").get<double>();
    m.diagnostics.meanCosine = d.at("mean_cosine").get<double>();
    m.diagnostics.similarity = d.at("similarity").get<double>();
    if (!d.at("root_offset").is_null())
        m.diagnostics.rootOffset = d.at("root_offset").get<double>();
    return m;
}

} // namespace

nlohmann::json AssociationToJson(const SessionAssociation& assoc)
{
    nlohmann::json frames = nlohmann::json::array();
    for (const auto& frame : assoc.assignments) {
        nlohmann::json row = nlohmann::json::array();
        for (const NodeId id : frame)
            row.push_back(NodeIdJson(id));
        frames.push_back(std::move(row));
    }
    return { { "session", assoc.session }, { "frames", std::move(frames) } };
}

SessionAssociation AssociationFromJson(const nlohmann::json& doc)
{
    try {
        SessionAssociation assoc;
        assoc.session = doc.at("session").get<std::string>();
        for (const auto& row : doc.at("frames")) {
            std::vector<NodeId> frame;
            for (const auto& id : row)
                frame.push_back(NodeIdFromJson(id));
            assoc.assignments.push_back(std::move(frame));
        }
        return assoc;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed association: ") + e.what());
    }
}

MapBuild BuildMap(std::span<const DetectionStream> sessions, const MapperConfig& config,
                  const std::optional<SemanticGraph>& initial)
{
    Mapper mapper(config);
    if (initial)
        mapper.SetLtg(*initial);

    MapBuild build;
    for (const auto& stream : sessions) {
        mapper.BeginSession(stream.header);
        std::vector<std::vector<NodeId>> local;
        local.reserve(stream.frames.size());
        for (const auto& frame : stream.frames) {
            auto report = mapper.ProcessFrame(frame);
            build.maxStgSize = std::max(build.maxStgSize, mapper.session().stg().Size());
            if (mapper.session().stg().Size() > ShortTermGraph::kCapacity)
                throw InvariantError("short-term graph exceeded its capacity");
            local.push_back(std::move(report.assignment));
            ++build.frames;
        }
        mapper.EndSession();

        SessionAssociation assoc;
        assoc.session = stream.header.session;
        for (auto& frame : local) {
            for (NodeId& id : frame)
                if (id != kInvalidNode) {
                    const auto bound = mapper.Binding(id);
                    if (!bound)
                        throw InvariantError("session node left unbound after the session ended");
                    id = *bound;
                }
            assoc.assignments.push_back(std::move(frame));
        }
        build.sessions.push_back(std::move(assoc));
    }
    build.ltg = mapper.ltg();
    return build;
}

QueryRun RunQueries(const DescriptorIndex& map, const DetectionStream& query,
                    const MapperConfig& config, int stride)
{
    config.Validate();
    if (stride < 1)
        throw InvalidArgument("query stride must be at least 1");

    SessionTracker tracker(config.association, config.match.duplicateGate);
    tracker.Begin(query.header);

    QueryRun run;
    run.session = query.header.session;
    run.association.session = query.header.session;
    for (std::size_t f = 0; f < query.frames.size(); ++f) {
        auto report = tracker.ProcessFrame(query.frames[f]);
        run.association.assignments.push_back(std::move(report.assignment));

        const bool due = (f + 1) % static_cast<std::size_t>(stride) == 0 || f + 1 == query.frames.size();
        if (!due || tracker.stg().Empty())
            continue;

        QueryRecord record;
        record.frame = f;
        record.roots.assign(tracker.stg().ids().begin(), tracker.stg().ids().end());
        const auto t0 = Clock::now();
        record.result = Localize(tracker.graph(), record.roots, map, config.match, &run.times);
        run.totalMs.push_back(std::chrono::duration<double, std::milli>(Clock::now() - t0).count());
        run.queries.push_back(std::move(record));
    }
    return run;
}

nlohmann::json MatchToJson(const NodeMatch& m)
{
    const auto& d = m.diagnostics;
    return { { "q", m.query }, { "db", m.db }, { "score", m.score },
             { "diagnostics", { { "gate_applied", d.gateApplied },
                                { "query_paths", d.queryPaths },
                                { "paired_paths", d.pairedPaths },
                                { "matched_paths", d.matchedPaths },
                                { "matched_fraction", d.matchedFraction },
                                { "mean_cosine", d.meanCosine },
                                { "similarity", d.similarity },
                                { "root_offset", std::isfinite(d.rootOffset) ? nlohmann::json(d.rootOffset)
                                                                             : nlohmann::json(nullptr) } } } };
}

nlohmann::json ReportToJson(const QueryRun& run)
{
    nlohmann::json queries = nlohmann::json::array();
    for (const auto& q : run.queries)
        queries.push_back(QueryToJson(q));

    nlohmann::json report = {
        { "query_session", run.session },
        { "accepted", false },
        { "scene_score", 0.0 },
        { "matches", nlohmann::json::array() },
        { "queries", std::move(queries) },
        { "assoc", AssociationToJson(run.association) },
    };
    if (!run.queries.empty()) {
        const auto last = QueryToJson(run.queries.back());
        report["accepted"] = last.at("accepted");
        report["scene_score"] = last.at("scene_score");
        report["matches"] = last.at("matches");
    }
    return report;
}

QueryRun ReportFromJson(const nlohmann::json& doc)
{
    try {
        QueryRun run;
        run.session = doc.at("query_session").get<std::string>();
        for (const auto& q : doc.at("queries")) {
            QueryRecord record;
            record.frame = q.at("frame").get<std::size_t>();
            record.roots = q.at("roots").get<std::vector<NodeId>>();
            record.result.accepted = q.at("accepted").get<bool>();
            record.result.sceneScore = q.at("scene_score").get<double>();
            for (const auto& m : q.at("matches"))
                record.result.matches.push_back(MatchFromJson(m));
            run.queries.push_back(std::move(record));
        }
        run.association = AssociationFromJson(doc.at("assoc"));
        return run;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed localization report: ") + e.what());
    }
}

Evaluation Evaluate(const QueryRun& run, const NodeLandmarks& queryOracle, const NodeLandmarks& mapOracle)
{
    Evaluation eval;
    std::vector<LabeledScore> scores;
    std::vector<QueryOutcome> outcomes;
    for (const auto& q : run.queries) {
        const auto labeled = ScoreCorrespondences(q.result, q.roots, queryOracle, mapOracle);
        scores.insert(scores.end(), labeled.scores.begin(), labeled.scores.end());
        eval.positives += labeled.positives;
        outcomes.push_back({ q.result.accepted, !labeled.scores.empty() && labeled.scores.front().positive });
    }
    if (scores.empty())
        throw InvalidArgument("no query produced a match to evaluate");

    eval.curve = PrCurve(scores, eval.positives);
    eval.auc = Auc(eval.curve);
    eval.successRate = SuccessRate(outcomes);
    eval.queries = outcomes.size();
    eval.labeled = scores.size();
    return eval;
}

NodeLandmarks MapOracle(const MapBuild& build, std::span<const GroundTruth> truths,
                        std::span<const DetectionStream> streams)
{
    if (truths.size() != build.sessions.size() || streams.size() != build.sessions.size())
        throw InvalidArgument("one ground truth and stream per mapped session required");

    std::vector<std::vector<NodeId>> assignments;
    std::vector<std::vector<int>> labels;
    for (std::size_t s = 0; s < truths.size(); ++s) {
        const auto sessionLabels = truths[s].ObservationLabels(streams[s]);
        assignments.insert(assignments.end(), build.sessions[s].assignments.begin(),
                           build.sessions[s].assignments.end());
        labels.insert(labels.end(), sessionLabels.begin(), sessionLabels.end());
    }
    return VoteNodeLandmarks(assignments, labels);
}

ExperimentResult RunExperiment(const ExperimentSpec& spec)
{
    ExperimentResult result;
    result.world = GenerateWorld(spec.world);
    result.sessions = MakeSessionPair(result.world, spec.map, spec.query);

    const std::vector<DetectionStream> streams { result.sessions.map.stream };
    const std::vector<GroundTruth> truths { result.sessions.map.truth };
    result.build = BuildMap(streams, spec.mapper);

    const auto index = ExtractAll(result.build.ltg, spec.mapper.match.Descriptor());
    result.run = RunQueries(index, result.sessions.query.stream, spec.mapper, spec.queryStride);

    const auto mapOracle = MapOracle(result.build, truths, streams);
    const auto queryOracle = VoteNodeLandmarks(
        result.run.association.assignments,
        result.sessions.query.truth.ObservationLabels(result.sessions.query.stream));
    result.evaluation = Evaluate(result.run, queryOracle, mapOracle);
    return result;
}

} // namespace oltsm
