#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "oltsm/geometry.hpp"
#include "oltsm/graph.hpp"

namespace oltsm {

/* One detected object in one frame */
struct ObjectObservation
{
    ClassId classId = 0;
    double confidence = 1.0;
    CameraPoint centerCam;
    std::optional<std::string> color;
};

struct DetectionFrame
{
    double timestamp = 0.0;
    YawDeg yaw;
    std::vector<ObjectObservation> observations;
};

/* First line of a detection stream */
struct StreamHeader
{
    std::string session;
    Extrinsics extrinsics;
    std::vector<std::string> classes;
};

struct DetectionStream
{
    StreamHeader header;
    std::vector<DetectionFrame> frames;
};

/* Digits used for floats in streams; enough for an exact round trip */
inline constexpr int kStreamSignificantDigits = 17;

/*
 * JSON Lines layout:
 *   {"classes":[...],"extrinsics":{"R":[9 row-major],"T":[3]},"session":"..."}
 *   {"obs":[{"center_cam":[x,y,z],"cls":0,"color":"red","conf":0.9}],"t":0.1,"yaw_deg":12.5}
 *   ...
 * Parse failures throw DataError naming the 1-based line number.
 */
DetectionStream ParseStream(std::istream& in);
DetectionStream ReadStream(const std::filesystem::path& path);

std::string HeaderLine(const StreamHeader& header);
std::string FrameLine(const DetectionFrame& frame);
void WriteStream(const DetectionStream& stream, std::ostream& out);
void WriteStream(const DetectionStream& stream, const std::filesystem::path& path);

} // namespace oltsm
