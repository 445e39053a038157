#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "oltsm/geometry.hpp"
#include "oltsm/graph.hpp"
#include "oltsm/stream.hpp"

namespace oltsm {

enum class WorldTemplate
{
    Corridor,   // straight hallway, landmarks on both walls
    Hospital,   // rectangular loop of hallways
    Random,     // landmarks scattered in a band around a straight route
};

WorldTemplate ParseWorldTemplate(const std::string& name);
std::string ToString(WorldTemplate layout);

struct WorldSpec
{
    WorldTemplate layout = WorldTemplate::Corridor;
    double length = 70.0;           // hallway length / loop perimeter / band length, meters
    double width = 4.0;             // hallway width, meters
    int landmarkCount = 100;
    double minSeparation = 1.0;     // meters between any two landmarks; 0 disables
    std::vector<double> classWeights;   // over the static classes; empty: default mix
    std::uint64_t seed = 0;

    void Validate() const;
};

struct Landmark
{
    int id = 0;
    ClassId classId = 0;
    Vec3 position = Vec3::Zero();   // world frame, axes aligned with magnetic north
};

struct World
{
    WorldSpec spec;
    std::vector<std::string> classes;
    std::set<ClassId> staticClasses;
    std::vector<Landmark> landmarks;
    std::vector<Vec3> route;        // polyline the robot follows (z = 0)
    Vec3 boundsMin = Vec3::Zero();
    Vec3 boundsMax = Vec3::Zero();
};

/* Class table shared by all templates: six static landmark classes followed
 * by two dynamic ones */
const std::vector<std::string>& DefaultClassTable();
std::set<ClassId> DefaultStaticClasses();

World GenerateWorld(const WorldSpec& spec);

/* Decorrelated child seed (splitmix64 of seed and index) */
std::uint64_t DeriveSeed(std::uint64_t seed, std::uint64_t index);

struct TrajectorySpec
{
    double speed = 0.5;     // m/s
    double rate = 10.0;     // frames per second
    double maxDuration = 0; // seconds, 0: one pass over the route

    void Validate() const;
};

struct PerturbationSpec
{
    double pDrop = 0.0;
    double pConfuse = 0.0;
    double sigmaCenter = 0.0;       // meters, per axis
    double sigmaYaw = 0.0;          // degrees
    double lateralOffset = 0.0;     // meters, to the left of the route
    double headingOffset = 0.0;     // degrees, added to the route heading
    int nDynamic = 0;

    void Validate() const;
};

struct SensorSpec
{
    double range = 8.0;     // planar meters
    double fov = 90.0;      // degrees
    Extrinsics extrinsics = DefaultCameraMount();

    /* Optical camera (x right, y down, z forward) on a forward-left-up body,
     * 0.2 m ahead of and 0.5 m above the body origin */
    static Extrinsics DefaultCameraMount();
};

struct SessionSpec
{
    std::string name = "session";
    TrajectorySpec trajectory;
    PerturbationSpec perturbation;
    SensorSpec sensor;
    std::uint64_t seed = 0;
};

struct FramePose
{
    double t = 0.0;
    Vec3 position = Vec3::Zero();
    double yaw = 0.0;   // true heading, degrees
};

struct Correspondence
{
    std::size_t frame = 0;
    std::size_t obs = 0;
    int landmark = -1;
};

struct DistractorTrack
{
    int id = 0;
    ClassId classId = 0;
    std::size_t firstFrame = 0;
    std::size_t lastFrame = 0;
};

struct SessionStats
{
    std::size_t emitted = 0;
    std::size_t dropped = 0;
    std::size_t outOfFrustum = 0;
};

struct GroundTruth
{
    std::vector<Landmark> landmarks;
    std::vector<FramePose> frames;
    std::vector<Correspondence> correspondences;           // landmark observations
    std::vector<DistractorTrack> distractors;
    std::vector<Correspondence> distractorObservations;    // landmark field holds the distractor id
    SessionStats stats;

    /* Landmark id per (frame, observation); -1 for distractors */
    std::vector<std::vector<int>> ObservationLabels(const DetectionStream& stream) const;
    std::vector<std::vector<int>> ObservationLabels(std::span<const std::size_t> observationsPerFrame) const;
};

struct Session
{
    DetectionStream stream;
    GroundTruth truth;
};

/* Throws InvalidArgument on bad specs or when the trajectory leaves the world */
Session GenerateSession(const World& world, const SessionSpec& spec);

struct SessionPair
{
    Session map;
    Session query;
    std::vector<int> sharedLandmarks;   // observed in both sessions; identity correspondence
};

SessionPair MakeSessionPair(const World& world, const SessionSpec& mapSpec, const SessionSpec& querySpec);

nlohmann::json GroundTruthToJson(const GroundTruth& truth);
GroundTruth GroundTruthFromJson(const nlohmann::json& doc);
void SaveGroundTruth(const GroundTruth& truth, const std::filesystem::path& path);
GroundTruth LoadGroundTruth(const std::filesystem::path& path);

} // namespace oltsm
