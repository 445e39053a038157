#pragma once

#include "oltsm/experiment.hpp"

namespace oltsm::bench {

/* Map of a corridor with `landmarks` landmarks, about one node per landmark */
inline SemanticGraph BuildCorridorMap(double length, int landmarks)
{
    WorldSpec ws;
    ws.length = length;
    ws.landmarkCount = landmarks;
    ws.seed = 3;
    const auto world = GenerateWorld(ws);
    SessionSpec s;
    s.seed = DeriveSeed(3, 1);
    MapperConfig config;
    config.association.staticClasses = DefaultStaticClasses();
    const std::vector<DetectionStream> streams { GenerateSession(world, s).stream };
    return BuildMap(streams, config).ltg;
}

} // namespace oltsm::bench
