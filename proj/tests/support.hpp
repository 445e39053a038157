#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Geometry>

#include "oltsm/geometry.hpp"
#include "oltsm/graph.hpp"

namespace oltsm::test {

inline std::vector<std::string> Classes(std::size_t k)
{
    std::vector<std::string> names;
    for (std::size_t i = 0; i < k; ++i)
        names.push_back("c" + std::to_string(i));
    return names;
}

inline double Uniform(std::mt19937_64& rng, double lo, double hi)
{
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Vec3 RandomVec(std::mt19937_64& rng, double scale)
{
    return Vec3(Uniform(rng, -scale, scale), Uniform(rng, -scale, scale), Uniform(rng, -scale, scale));
}

/* Random proper rotation from a random unit quaternion */
inline Mat3 RandomRotation(std::mt19937_64& rng)
{
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
    q.normalize();
    return q.toRotationMatrix();
}

/* Random graph with explicit positions; edges get dvec = pos[b] - pos[a] */
struct RandomGraph
{
    SemanticGraph graph;
    std::vector<Vec3> positions;
};

inline RandomGraph MakeRandomGraph(std::mt19937_64& rng, std::size_t nodes, double edgeProbability,
                                   std::size_t classCount)
{
    RandomGraph out { SemanticGraph(Classes(classCount)), {} };
    std::uniform_int_distribution<ClassId> cls(0, static_cast<ClassId>(classCount - 1));
    for (std::size_t i = 0; i < nodes; ++i) {
        LandmarkNode node;
        node.classId = cls(rng);
        node.center = RandomVec(rng, 10.0);
        out.positions.push_back(node.center);
        out.graph.AddNode(node);
    }
    for (NodeId a = 0; a < nodes; ++a)
        for (NodeId b = a + 1; b < nodes; ++b)
            if (Uniform(rng, 0.0, 1.0) < edgeProbability)
                out.graph.AddEdge(a, b, out.positions[b] - out.positions[a]);
    return out;
}

/* Independent world -> body transform for a clockwise-positive heading */
inline Vec3 WorldToBody(const Vec3& world, const Vec3& robot, double yawDeg)
{
    const double r = yawDeg * std::numbers::pi / 180.0;
    const Vec3 forward(std::cos(r), -std::sin(r), 0.0);
    const Vec3 left(std::sin(r), std::cos(r), 0.0);
    const Vec3 d = world - robot;
    return Vec3(d.dot(forward), d.dot(left), d.z());
}

} // namespace oltsm::test
