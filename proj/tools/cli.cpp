#include "cli.hpp"

#include <cstdlib>
#include <fstream>
#include <future>
#include <iomanip>
#include <map>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <openssl/evp.h>

#include "oltsm/canonical_json.hpp"
#include "oltsm/error.hpp"
#include "oltsm/eval.hpp"
#include "oltsm/experiment.hpp"
#include "oltsm/map_io.hpp"
#include "oltsm/stream.hpp"

namespace oltsm::cli {

namespace {

constexpr const char* kManifestFormat = "oltsm-manifest/1";
constexpr int kReportDigits = 17;

using PathMap = std::map<std::string, std::filesystem::path>;

void WriteText(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw DataError("cannot open " + path.string() + " for writing");
    out << text;
    if (!out)
        throw DataError("failed writing " + path.string());
}

nlohmann::json ReadJson(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw DataError("cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(path.string() + " is not valid JSON: " + e.what());
    }
}

void WriteManifest(const std::filesystem::path& path, const std::string& command,
                   const RunConfig& config, const PathMap& inputs, const PathMap& outputs)
{
    nlohmann::json in = nlohmann::json::object();
    for (const auto& [name, file] : inputs)
        in[name] = { { "path", file.string() }, { "sha256", Sha256File(file) } };
    nlohmann::json out = nlohmann::json::object();
    for (const auto& [name, file] : outputs)
        out[name] = { { "path", file.filename().string() }, { "sha256", Sha256File(file) } };

    const nlohmann::json manifest = {
        { "format", kManifestFormat },
        { "command", command },
        { "seed", config.seed },
        { "config", config.ToJson() },
        { "inputs", std::move(in) },
        { "outputs", std::move(out) },
    };
    WriteText(path, CanonicalDump(manifest, kReportDigits) + "\n");
}

std::filesystem::path ManifestFor(const std::filesystem::path& output, const std::string& explicitPath)
{
    if (!explicitPath.empty())
        return explicitPath;
    return output.string() + ".manifest.json";
}

/* Descriptor extraction split across worker threads, merged by node id */
DescriptorIndex ExtractParallel(const SemanticGraph& graph, const DescriptorConfig& config, int jobs)
{
    if (jobs <= 1)
        return ExtractAll(graph, config);

    std::vector<NodeId> ids;
    for (const auto& [id, node] : graph.nodes())
        ids.push_back(id);
    std::vector<SceneDescriptor> out(ids.size());
    std::vector<std::future<void>> workers;
    for (int w = 0; w < jobs; ++w) {
        workers.push_back(std::async(std::launch::async, [&, w] {
            for (std::size_t i = static_cast<std::size_t>(w); i < ids.size(); i += static_cast<std::size_t>(jobs))
                out[i] = ExtractDescriptor(graph, ids[i], config);
        }));
    }
    for (auto& w : workers)
        w.get();

    DescriptorIndex index;
    for (std::size_t i = 0; i < ids.size(); ++i)
        index.emplace(ids[i], std::move(out[i]));
    return index;
}

struct SimulatedPaths
{
    std::filesystem::path mapStream;
    std::filesystem::path mapTruth;
    std::filesystem::path queryStream;
    std::filesystem::path queryTruth;
};

SimulatedPaths DoSimulate(const RunConfig& config, const std::filesystem::path& dir)
{
    const World world = GenerateWorld(config.World());
    const auto mapSpec = config.MapSession();
    const auto querySpec = config.QuerySession();

    Session map;
    Session query;
    if (config.jobs > 1) {
        auto pending = std::async(std::launch::async, [&] { return GenerateSession(world, querySpec); });
        map = GenerateSession(world, mapSpec);
        query = pending.get();
    } else {
        map = GenerateSession(world, mapSpec);
        query = GenerateSession(world, querySpec);
    }

    std::filesystem::create_directories(dir);
    SimulatedPaths paths { dir / "map.jsonl", dir / "map_gt.json", dir / "query.jsonl", dir / "query_gt.json" };
    WriteStream(map.stream, paths.mapStream);
    SaveGroundTruth(map.truth, paths.mapTruth);
    WriteStream(query.stream, paths.queryStream);
    SaveGroundTruth(query.truth, paths.queryTruth);
    return paths;
}

void DoMap(const RunConfig& config, const std::vector<std::filesystem::path>& inputs,
           const std::filesystem::path& initial, const std::filesystem::path& out,
           const std::filesystem::path& assocOut)
{
    std::vector<DetectionStream> streams;
    for (const auto& in : inputs)
        streams.push_back(ReadStream(in));

    std::optional<SemanticGraph> start;
    if (!initial.empty())
        start = LoadMap(initial);

    const auto mapper = config.Mapper(streams.front().header.classes);
    const auto build = BuildMap(streams, mapper, start);
    SaveMap(build.ltg, out);

    if (!assocOut.empty()) {
        nlohmann::json sessions = nlohmann::json::array();
        for (const auto& s : build.sessions)
            sessions.push_back(AssociationToJson(s));
        WriteText(assocOut, CanonicalDump({ { "sessions", std::move(sessions) } }, kReportDigits) + "\n");
    }
}

QueryRun DoLocalize(const RunConfig& config, const std::filesystem::path& mapPath,
                    const std::filesystem::path& in, const std::filesystem::path& out,
                    const std::filesystem::path& cache, const std::filesystem::path& timingOut)
{
    const SemanticGraph map = LoadMap(mapPath);
    const auto stream = ReadStream(in);
    const auto mapper = config.Mapper(stream.header.classes);
    if (map.classTable() != stream.header.classes)
        throw DataError("query class table differs from the map's class table");

    DescriptorIndex index;
    const auto fingerprint = MapFingerprint(map);
    if (cache.empty() || !LoadDescriptorCache(cache, fingerprint, config.pathLength, index)) {
        index = ExtractParallel(map, mapper.match.Descriptor(), config.jobs);
        if (!cache.empty())
            SaveDescriptorCache(index, fingerprint, config.pathLength, cache);
    }

    auto run = RunQueries(index, stream, mapper, config.queryStride);
    WriteText(out, CanonicalDump(ReportToJson(run), kReportDigits) + "\n");
    if (!timingOut.empty()) {
        const nlohmann::json timing = { { "descriptor_ms", run.times.descriptorMs },
                                        { "matching_ms", run.times.matchingMs },
                                        { "total_ms", run.totalMs } };
        WriteText(timingOut, timing.dump() + "\n");
    }
    return run;
}

struct EvalInputs
{
    std::filesystem::path map;
    std::filesystem::path mapAssoc;
    std::vector<std::filesystem::path> mapTruths;
    std::filesystem::path report;
    std::filesystem::path queryTruth;
    std::filesystem::path timing;
    std::filesystem::path csv;
    std::filesystem::path summary;
};

std::vector<std::size_t> FrameSizes(const SessionAssociation& assoc)
{
    std::vector<std::size_t> sizes;
    for (const auto& frame : assoc.assignments)
        sizes.push_back(frame.size());
    return sizes;
}

TimingReport TimingFromSamples(const std::vector<double>& descriptor, const std::vector<double>& matching,
                               const std::vector<double>& total)
{
    return { Summarize(descriptor), Summarize(matching), Summarize(total) };
}

void DoEval(const EvalInputs& in, const std::optional<TimingReport>& measured)
{
    const auto assocDoc = ReadJson(in.mapAssoc);
    std::vector<SessionAssociation> sessions;
    try {
        for (const auto& s : assocDoc.at("sessions"))
            sessions.push_back(AssociationFromJson(s));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed association file: ") + e.what());
    }
    if (sessions.size() != in.mapTruths.size())
        throw InvalidArgument("one --map-gt per mapped session required (" +
                              std::to_string(sessions.size()) + " sessions)");

    std::vector<std::vector<NodeId>> assignments;
    std::vector<std::vector<int>> labels;
    for (std::size_t s = 0; s < sessions.size(); ++s) {
        const auto truth = LoadGroundTruth(in.mapTruths[s]);
        const auto sessionLabels = truth.ObservationLabels(FrameSizes(sessions[s]));
        assignments.insert(assignments.end(), sessions[s].assignments.begin(), sessions[s].assignments.end());
        labels.insert(labels.end(), sessionLabels.begin(), sessionLabels.end());
    }
    const auto mapOracle = VoteNodeLandmarks(assignments, labels);

    const auto run = ReportFromJson(ReadJson(in.report));
    const auto queryTruth = LoadGroundTruth(in.queryTruth);
    const auto queryOracle = VoteNodeLandmarks(run.association.assignments,
                                               queryTruth.ObservationLabels(FrameSizes(run.association)));

    const auto evaluation = Evaluate(run, queryOracle, mapOracle);
    WritePrCsv(evaluation.curve, in.csv);

    if (!in.summary.empty()) {
        TimingReport timing;
        if (measured) {
            timing = *measured;
        } else if (!in.timing.empty()) {
            const auto doc = ReadJson(in.timing);
            try {
                timing = TimingFromSamples(doc.at("descriptor_ms").get<std::vector<double>>(),
                                           doc.at("matching_ms").get<std::vector<double>>(),
                                           doc.at("total_ms").get<std::vector<double>>());
            } catch (const nlohmann::json::exception& e) {
                throw DataError(std::string("malformed timing file: ") + e.what());
            }
        }
        nlohmann::json summary = {
            { "auc", evaluation.auc },
            { "success_rate", evaluation.successRate },
            { "storage_bytes", nullptr },
            { "timing", TimingToJson(timing) },
            { "queries", evaluation.queries },
            { "labeled_matches", evaluation.labeled },
            { "positives", evaluation.positives },
        };
        if (!in.map.empty())
            summary["storage_bytes"] = MapStorageBytes(in.map);
        WriteText(in.summary, summary.dump(2) + "\n");
    }
}

void DoPipeline(const RunConfig& config, const std::filesystem::path& dir)
{
    const auto sim = DoSimulate(config, dir);
    const auto mapPath = dir / "map.json";
    const auto assocPath = dir / "map_assoc.json";
    const auto reportPath = dir / "report.json";
    DoMap(config, { sim.mapStream }, {}, mapPath, assocPath);
    const auto run = DoLocalize(config, mapPath, sim.queryStream, reportPath, {}, {});

    EvalInputs eval;
    eval.map = mapPath;
    eval.mapAssoc = assocPath;
    eval.mapTruths = { sim.mapTruth };
    eval.report = reportPath;
    eval.queryTruth = sim.queryTruth;
    eval.csv = dir / "pr.csv";
    eval.summary = dir / "summary.json";
    DoEval(eval, TimingFromSamples(run.times.descriptorMs, run.times.matchingMs, run.totalMs));

    /* summary.json carries wall-clock timings and is left out of the hashed outputs */
    WriteManifest(dir / "manifest.json", "pipeline", config, {},
                  { { "map_stream", sim.mapStream }, { "map_gt", sim.mapTruth },
                    { "query_stream", sim.queryStream }, { "query_gt", sim.queryTruth },
                    { "map", mapPath }, { "map_assoc", assocPath },
                    { "report", reportPath }, { "pr_csv", eval.csv } });
}

void AddWorldOptions(CLI::App* app, RunConfig& c)
{
    app->add_option("--template", c.layout, "World layout")
        ->check(CLI::IsMember({ "corridor", "hospital", "random" }));
    app->add_option("--length", c.length, "Route length in meters");
    app->add_option("--width", c.width, "Hallway width in meters");
    app->add_option("--landmarks", c.landmarks, "Landmark count");
    app->add_option("--min-separation", c.minSeparation, "Minimum landmark spacing in meters");
    app->add_option("--speed", c.speed, "Robot speed, m/s");
    app->add_option("--rate", c.rate, "Frame rate, Hz");
    app->add_option("--duration", c.duration, "Session length cap in seconds (0: one pass)");
    app->add_option("--p-drop", c.pDrop, "Query detection dropout probability");
    app->add_option("--p-confuse", c.pConfuse, "Query class confusion probability");
    app->add_option("--sigma-center", c.sigmaCenter, "Query center noise, meters");
    app->add_option("--sigma-yaw", c.sigmaYaw, "Query yaw noise, degrees");
    app->add_option("--lateral-offset", c.lateralOffset, "Query lateral offset, meters");
    app->add_option("--heading-offset", c.headingOffset, "Query heading offset, degrees");
    app->add_option("--n-dynamic", c.nDynamic, "Transient distractor tracks in the query session");
}

void AddMappingOptions(CLI::App* app, RunConfig& c)
{
    app->add_option("--gate-distance", c.gateDistance, "Association gate, meters");
    app->add_option("--min-confidence", c.minConfidence, "Minimum detection confidence");
    app->add_option("--edge-max-distance", c.edgeMaxDistance, "Longest edge, meters");
    app->add_option("--min-hits", c.minHits, "Sightings before a landmark becomes a node");
    app->add_option("--static-classes", c.staticClasses, "Comma separated landmark class names");
    app->add_flag("--all-classes", c.allClasses, "Treat every class as a landmark class");
    app->add_option("--tau-map", c.tauMap, "Merge threshold of the hierarchy update");
    app->add_option("--merge-gate", c.mergeGate, "Largest mean neighbour-vector offset of a merge, meters");
    app->add_option("--stride", c.hierarchyStride, "Frames between hierarchy updates");
    app->add_option("--working-radius", c.workingRadius, "Working graph radius, hops");
}

void AddMatchOptions(CLI::App* app, RunConfig& c)
{
    app->add_option("--tau-accept", c.tauAccept, "Scene score needed to accept a localization");
    app->add_option("--duplicate-gate", c.duplicateGate, "Duplicate suppression gate, meters");
    app->add_option("--path-length", c.pathLength, "Nodes per descriptor path");
    app->add_option("--query-radius", c.queryRadius, "Query neighbourhood radius, hops");
    app->add_option("--query-stride", c.queryStride, "Frames between localization queries");
}

CLI::Option* AddSeed(CLI::App* app, RunConfig& c)
{
    return app->add_option("--seed", c.seed, "Random seed (falls back to $OLTSM_SEED)");
}

void ResolveSeed(const CLI::Option* option, RunConfig& c)
{
    if (option->count() > 0)
        return;
    const char* env = std::getenv("OLTSM_SEED");
    if (!env || !*env)
        throw CLI::RequiredError("--seed (or OLTSM_SEED)");
    try {
        std::size_t used = 0;
        c.seed = std::stoull(env, &used);
        if (env[used] != '\0')
            throw std::invalid_argument(env);
    } catch (const std::exception&) {
        throw CLI::ValidationError("OLTSM_SEED", std::string("not an unsigned integer: ") + env);
    }
}

} // namespace

nlohmann::json RunConfig::ToJson() const
{
    return {
        { "seed", seed },
        { "world", { { "template", layout }, { "length", length }, { "width", width },
                     { "landmarks", landmarks }, { "min_separation", minSeparation } } },
        { "trajectory", { { "speed", speed }, { "rate", rate }, { "duration", duration } } },
        { "perturbation", { { "p_drop", pDrop }, { "p_confuse", pConfuse },
                            { "sigma_center", sigmaCenter }, { "sigma_yaw", sigmaYaw },
                            { "lateral_offset", lateralOffset }, { "heading_offset", headingOffset },
                            { "n_dynamic", nDynamic } } },
        { "mapping", { { "gate_distance", gateDistance }, { "min_confidence", minConfidence },
                       { "edge_max_distance", edgeMaxDistance }, { "min_hits", minHits },
                       { "static_classes", staticClasses }, { "all_classes", allClasses },
                       { "tau_map", tauMap }, { "merge_gate", mergeGate }, { "stride", hierarchyStride },
                       { "working_radius", workingRadius } } },
        { "matching", { { "tau_accept", tauAccept }, { "duplicate_gate", duplicateGate },
                        { "path_length", pathLength }, { "query_radius", queryRadius },
                        { "query_stride", queryStride } } },
        { "jobs", jobs },
    };
}

RunConfig RunConfig::FromJson(const nlohmann::json& doc)
{
    try {
        RunConfig c;
        c.seed = doc.at("seed").get<std::uint64_t>();
        const auto& w = doc.at("world");
        c.layout = w.at("template").get<std::string>();
        c.length = w.at("length").get<double>();
        c.width = w.at("width").get<double>();
        c.landmarks = w.at("landmarks").get<int>();
        c.minSeparation = w.at("min_separation").get<double>();
        const auto& t = doc.at("trajectory");
        c.speed = t.at("speed").get<double>();
        c.rate = t.at("rate").get<double>();
        c.duration = t.at("duration").get<double>();
        const auto& p = doc.at("perturbation");
        c.pDrop = p.at("p_drop").get<double>();
        c.pConfuse = p.at("p_confuse").get<double>();
        c.sigmaCenter = p.at("sigma_center").get<double>();
        c.sigmaYaw = p.at("sigma_yaw").get<double>();
        c.lateralOffset = p.at("lateral_offset").get<double>();
        c.headingOffset = p.at("heading_offset").get<double>();
        c.nDynamic = p.at("n_dynamic").get<int>();
        const auto& m = doc.at("mapping");
        c.gateDistance = m.at("gate_distance").get<double>();
        c.minConfidence = m.at("min_confidence").get<double>();
        c.edgeMaxDistance = m.at("edge_max_distance").get<double>();
        c.minHits = m.at("min_hits").get<int>();
        c.staticClasses = m.at("static_classes").get<std::string>();
        c.allClasses = m.at("all_classes").get<bool>();
        c.tauMap = m.at("tau_map").get<double>();
        c.mergeGate = m.at("merge_gate").get<double>();
        c.hierarchyStride = m.at("stride").get<int>();
        c.workingRadius = m.at("working_radius").get<int>();
        const auto& q = doc.at("matching");
        c.tauAccept = q.at("tau_accept").get<double>();
        c.duplicateGate = q.at("duplicate_gate").get<double>();
        c.pathLength = q.at("path_length").get<int>();
        c.queryRadius = q.at("query_radius").get<int>();
        c.queryStride = q.at("query_stride").get<int>();
        c.jobs = doc.at("jobs").get<int>();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed run configuration: ") + e.what());
    }
}

WorldSpec RunConfig::World() const
{
    WorldSpec spec;
    spec.layout = ParseWorldTemplate(layout);
    spec.length = length;
    spec.width = width;
    spec.landmarkCount = landmarks;
    spec.minSeparation = minSeparation;
    spec.seed = DeriveSeed(seed, 0);
    return spec;
}

SessionSpec RunConfig::MapSession() const
{
    SessionSpec spec;
    spec.name = "map";
    spec.trajectory = { speed, rate, duration };
    spec.seed = DeriveSeed(seed, 1);
    return spec;
}

SessionSpec RunConfig::QuerySession() const
{
    SessionSpec spec = this->MapSession();
    spec.name = "query";
    spec.perturbation = { pDrop, pConfuse, sigmaCenter, sigmaYaw, lateralOffset, headingOffset, nDynamic };
    spec.seed = DeriveSeed(seed, 2);
    return spec;
}

MapperConfig RunConfig::Mapper(const std::vector<std::string>& classes) const
{
    MapperConfig config;
    config.association.gateDistance = gateDistance;
    config.association.minConfidence = minConfidence;
    config.association.edgeMaxDistance = edgeMaxDistance;
    config.association.minHits = minHits;
    if (!allClasses) {
        std::set<ClassId> ids;
        std::stringstream names(staticClasses);
        std::string name;
        while (std::getline(names, name, ','))
            for (std::size_t i = 0; i < classes.size(); ++i)
                if (classes[i] == name)
                    ids.insert(static_cast<ClassId>(i));
        config.association.staticClasses = std::move(ids);
    }
    config.tauMap = tauMap;
    config.mergeGate = mergeGate;
    config.hierarchyStride = hierarchyStride;
    config.workingRadius = workingRadius;
    config.match.tauAccept = tauAccept;
    config.match.duplicateGate = duplicateGate;
    config.match.pathLength = pathLength;
    config.match.queryRadius = queryRadius;
    config.Validate();
    return config;
}

std::string Sha256File(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw DataError("cannot read " + path.string() + " for hashing");

    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
        throw InvariantError("SHA-256 context setup failed");
    std::vector<char> buffer(1 << 16);
    while (in) {
        in.read(buffer.data(), static_cast<std::streamsize>(buffer.size()));
        if (in.gcount() > 0)
            EVP_DigestUpdate(ctx.get(), buffer.data(), static_cast<std::size_t>(in.gcount()));
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    EVP_DigestFinal_ex(ctx.get(), digest, &length);

    std::ostringstream hex;
    for (unsigned int i = 0; i < length; ++i)
        hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
    return hex.str();
}

int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    RunConfig config;
    CLI::App app { "Object-level topological semantic mapping and localization", "oltsm" };
    app.require_subcommand(1);

    auto* jobsOption = app.add_option("--jobs", config.jobs, "Worker threads")->check(CLI::PositiveNumber);
    (void)jobsOption;

    /* simulate */
    auto* simulate = app.add_subcommand("simulate", "Generate a world with a map and a query session");
    auto* simulateSeed = AddSeed(simulate, config);
    std::string simulateDir;
    simulate->add_option("--out-dir", simulateDir, "Output directory")->required();
    AddWorldOptions(simulate, config);
    simulate->add_option("--jobs", config.jobs, "Worker threads")->check(CLI::PositiveNumber);

    /* map */
    auto* map = app.add_subcommand("map", "Build a long-term map from detection streams");
    std::vector<std::string> mapInputs;
    std::string mapOut, mapAssoc, mapInit, mapManifest;
    map->add_option("--in", mapInputs, "Detection stream (repeatable, mapped in order)")->required();
    map->add_option("--out", mapOut, "Map file")->required();
    map->add_option("--assoc-out", mapAssoc, "Per-observation node assignments");
    map->add_option("--init", mapInit, "Existing map to extend");
    map->add_option("--manifest", mapManifest, "Manifest path (default: <out>.manifest.json)");
    AddMappingOptions(map, config);
    AddMatchOptions(map, config);
    map->add_option("--jobs", config.jobs, "Worker threads")->check(CLI::PositiveNumber);

    /* localize */
    auto* localize = app.add_subcommand("localize", "Localize a query stream against a map");
    std::string locMap, locIn, locOut, locCache, locTiming, locManifest;
    localize->add_option("--map", locMap, "Map file")->required();
    localize->add_option("--in", locIn, "Query detection stream")->required();
    localize->add_option("--out", locOut, "Localization report")->required();
    localize->add_option("--desc-cache", locCache, "Descriptor cache file");
    localize->add_option("--timing-out", locTiming, "Raw per-stage timing samples");
    localize->add_option("--manifest", locManifest, "Manifest path (default: <out>.manifest.json)");
    AddMappingOptions(localize, config);
    AddMatchOptions(localize, config);
    localize->add_option("--jobs", config.jobs, "Worker threads")->check(CLI::PositiveNumber);

    /* eval */
    auto* eval = app.add_subcommand("eval", "Score a localization report against ground truth");
    EvalInputs evalIn;
    std::vector<std::string> evalMapTruths;
    std::string evalMap, evalAssoc, evalReport, evalQueryTruth, evalTiming, evalCsv, evalSummary, evalManifest;
    eval->add_option("--map", evalMap, "Map file (for storage size)");
    eval->add_option("--map-assoc", evalAssoc, "Association file written by map")->required();
    eval->add_option("--map-gt", evalMapTruths, "Ground truth per mapped session")->required();
    eval->add_option("--report", evalReport, "Localization report")->required();
    eval->add_option("--query-gt", evalQueryTruth, "Query ground truth")->required();
    eval->add_option("--timing", evalTiming, "Timing samples written by localize");
    eval->add_option("--csv", evalCsv, "Precision-recall CSV")->required();
    eval->add_option("--summary", evalSummary, "Summary JSON");
    eval->add_option("--manifest", evalManifest, "Manifest path (default: <csv>.manifest.json)");

    /* pipeline */
    auto* pipeline = app.add_subcommand("pipeline", "simulate, map, localize and eval in one run");
    auto* pipelineSeed = AddSeed(pipeline, config);
    std::string pipelineDir, fromManifest;
    pipeline->add_option("--out-dir", pipelineDir, "Output directory")->required();
    pipeline->add_option("--from-manifest", fromManifest, "Re-run the configuration of a manifest");
    AddWorldOptions(pipeline, config);
    AddMappingOptions(pipeline, config);
    AddMatchOptions(pipeline, config);
    auto* pipelineJobs = pipeline->add_option("--jobs", config.jobs, "Worker threads")->check(CLI::PositiveNumber);

    std::vector<std::string> argvStore { "oltsm" };
    argvStore.insert(argvStore.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : argvStore)
        argv.push_back(a.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
        if (simulate->parsed())
            ResolveSeed(simulateSeed, config);
        if (pipeline->parsed() && fromManifest.empty())
            ResolveSeed(pipelineSeed, config);
    } catch (const CLI::CallForHelp&) {
        const CLI::App* target = &app;
        for (const auto* sub : app.get_subcommands())
            target = sub;
        out << target->help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        const CLI::App* target = &app;
        for (const auto* sub : app.get_subcommands())
            target = sub;
        err << "error: " << e.what() << "\n\n" << target->help();
        return kUsage;
    }

    try {
        if (simulate->parsed()) {
            const auto paths = DoSimulate(config, simulateDir);
            WriteManifest(std::filesystem::path(simulateDir) / "manifest.json", "simulate", config, {},
                          { { "map_stream", paths.mapStream }, { "map_gt", paths.mapTruth },
                            { "query_stream", paths.queryStream }, { "query_gt", paths.queryTruth } });
            out << "wrote " << simulateDir << "\n";
        } else if (map->parsed()) {
            std::vector<std::filesystem::path> inputs(mapInputs.begin(), mapInputs.end());
            DoMap(config, inputs, mapInit, mapOut, mapAssoc);
            PathMap in;
            for (std::size_t i = 0; i < inputs.size(); ++i)
                in["in" + std::to_string(i)] = inputs[i];
            if (!mapInit.empty())
                in["init"] = mapInit;
            PathMap outputs { { "map", mapOut } };
            if (!mapAssoc.empty())
                outputs["map_assoc"] = mapAssoc;
            WriteManifest(ManifestFor(mapOut, mapManifest), "map", config, in, outputs);
            out << "wrote " << mapOut << "\n";
        } else if (localize->parsed()) {
            const auto run = DoLocalize(config, locMap, locIn, locOut, locCache, locTiming);
            WriteManifest(ManifestFor(locOut, locManifest), "localize", config,
                          { { "map", locMap }, { "in", locIn } }, { { "report", locOut } });
            const auto& last = run.queries.empty() ? QueryRecord {} : run.queries.back();
            out << "queries " << run.queries.size() << ", last scene score "
                << FormatDouble(last.result.sceneScore, 6)
                << (last.result.accepted ? " (accepted)" : " (rejected)") << "\n";
        } else if (eval->parsed()) {
            evalIn.map = evalMap;
            evalIn.mapAssoc = evalAssoc;
            evalIn.mapTruths.assign(evalMapTruths.begin(), evalMapTruths.end());
            evalIn.report = evalReport;
            evalIn.queryTruth = evalQueryTruth;
            evalIn.timing = evalTiming;
            evalIn.csv = evalCsv;
            evalIn.summary = evalSummary;
            DoEval(evalIn, std::nullopt);
            PathMap in { { "map_assoc", evalAssoc }, { "report", evalReport }, { "query_gt", evalQueryTruth } };
            for (std::size_t i = 0; i < evalMapTruths.size(); ++i)
                in["map_gt" + std::to_string(i)] = evalMapTruths[i];
            if (!evalMap.empty())
                in["map"] = evalMap;
            WriteManifest(ManifestFor(evalCsv, evalManifest), "eval", config, in, { { "pr_csv", evalCsv } });
            out << "wrote " << evalCsv << "\n";
        } else if (pipeline->parsed()) {
            if (!fromManifest.empty()) {
                const auto manifest = ReadJson(fromManifest);
                if (manifest.value("format", "") != kManifestFormat || manifest.value("command", "") != "pipeline")
                    throw DataError(fromManifest + " is not a pipeline manifest");
                const int jobs = config.jobs;
                config = RunConfig::FromJson(manifest.at("config"));
                if (pipelineJobs->count() > 0)
                    config.jobs = jobs;
            }
            DoPipeline(config, pipelineDir);
            out << "wrote " << pipelineDir << "\n";
        }
        return kOk;
    } catch (const InvalidArgument& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << "\n";
        return kDataError;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "data error: " << e.what() << "\n";
        return kDataError;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return kInternalError;
    }
}

} // namespace oltsm::cli
