#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "oltsm/mapping.hpp"
#include "oltsm/simulator.hpp"

namespace oltsm::cli {

enum ExitCode : int
{
    kOk = 0,
    kUsage = 1,
    kDataError = 2,
    kInternalError = 3,
};

/* Every knob a run can set; recorded verbatim in the run manifest */
struct RunConfig
{
    std::uint64_t seed = 0;

    std::string layout = "corridor";
    double length = 70.0;
    double width = 4.0;
    int landmarks = 100;
    double minSeparation = 1.0;

    double speed = 0.5;
    double rate = 10.0;
    double duration = 0.0;

    double pDrop = 0.0;
    double pConfuse = 0.0;
    double sigmaCenter = 0.0;
    double sigmaYaw = 0.0;
    double lateralOffset = 0.0;
    double headingOffset = 0.0;
    int nDynamic = 0;

    double gateDistance = 1.0;
    double minConfidence = 0.5;
    double edgeMaxDistance = 10.0;
    int minHits = 3;
    std::string staticClasses = "door,sign,pillar,fire_hydrant,extinguisher,window";
    bool allClasses = false;
    double tauMap = 0.8;
    double mergeGate = 1.0;
    int hierarchyStride = 1;
    int workingRadius = 3;

    double tauAccept = 0.6;
    double duplicateGate = 0.5;
    int pathLength = 3;
    int queryRadius = 5;
    int queryStride = 50;

    int jobs = 1;

    nlohmann::json ToJson() const;
    static RunConfig FromJson(const nlohmann::json& doc);

    WorldSpec World() const;
    SessionSpec MapSession() const;     // baseline: no perturbation
    SessionSpec QuerySession() const;
    /* Resolves the static class names against a session's class table */
    MapperConfig Mapper(const std::vector<std::string>& classes) const;
};

/* Lower-case hex SHA-256 of a file's bytes. Throws DataError if unreadable. */
std::string Sha256File(const std::filesystem::path& path);

/* Runs one command line (without the program name) */
int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace oltsm::cli
