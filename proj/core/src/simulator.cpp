#include "oltsm/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include "oltsm/canonical_json.hpp"
#include "oltsm/error.hpp"

namespace oltsm {

namespace {

/* Independent random streams, one per concern, so that changing one
 * perturbation level never reshuffles the draws of another */
enum class RngStream : std::uint64_t
{
    World = 1,
    Drop,
    Confuse,
    Noise,
    Confidence,
    Yaw,
    Dynamics,
    DynamicDrop,
    DynamicNoise,
};

std::mt19937_64 MakeEngine(std::uint64_t seed, RngStream stream)
{
    const auto s = static_cast<std::uint64_t>(stream);
    std::seed_seq seq { static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                        static_cast<std::uint32_t>(s), 0x6f6c74u };
    return std::mt19937_64(seq);
}

double Uniform(std::mt19937_64& rng, double lo, double hi)
{
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

double Gaussian(std::mt19937_64& rng)
{
    return std::normal_distribution<double>(0.0, 1.0)(rng);
}

double Deg2Rad(double deg) { return deg * std::numbers::pi / 180.0; }

/* Magnetic-frame unit vector of a clockwise-positive heading */
Vec3 HeadingVector(double yawDeg)
{
    return Vec3(std::cos(Deg2Rad(yawDeg)), -std::sin(Deg2Rad(yawDeg)), 0.0);
}

/* Left-hand normal of a planar direction (body +y) */
Vec3 LeftNormal(const Vec3& dir)
{
    return Vec3(-dir.y(), dir.x(), 0.0);
}

double RouteLength(const std::vector<Vec3>& route)
{
    double total = 0.0;
    for (std::size_t i = 1; i < route.size(); ++i)
        total += (route[i] - route[i - 1]).norm();
    return total;
}

/* Point and unit direction at arc length s along the route */
std::pair<Vec3, Vec3> RouteAt(const std::vector<Vec3>& route, double s)
{
    for (std::size_t i = 1; i < route.size(); ++i) {
        const Vec3 seg = route[i] - route[i - 1];
        const double len = seg.norm();
        if (s < len || i + 1 == route.size()) {
            const double u = std::clamp(s, 0.0, len);
            return { route[i - 1] + seg / len * u, seg / len };
        }
        s -= len;
    }
    throw InvariantError("route needs at least two points");
}

double DistanceToRoute(const std::vector<Vec3>& route, const Vec3& p)
{
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < route.size(); ++i) {
        const Vec3 a = route[i - 1];
        const Vec3 ab = route[i] - a;
        const double u = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
        const Vec3 q = a + ab * u;
        best = std::min(best, std::hypot(p.x() - q.x(), p.y() - q.y()));
    }
    return best;
}

double HalfWidth(const World& world)
{
    return world.spec.layout == WorldTemplate::Random ? world.spec.length / 8.0
                                                      : world.spec.width / 2.0;
}

ClassId SampleClass(std::mt19937_64& rng, const std::vector<double>& weights)
{
    std::discrete_distribution<int> pick(weights.begin(), weights.end());
    return static_cast<ClassId>(pick(rng));
}

/* Returns true if a camera-frame point is inside the planar frustum */
bool InFrustum(const CameraPoint& c, const SensorSpec& sensor)
{
    if (c.z() <= 0.0)
        return false;
    if (std::hypot(c.x(), c.z()) > sensor.range)
        return false;
    return std::abs(std::atan2(c.x(), c.z())) <= Deg2Rad(sensor.fov / 2.0);
}

CameraPoint ToCamera(const Vec3& world, const FramePose& pose, const SensorSpec& sensor)
{
    const MagneticPoint rel(world - pose.position);
    const BodyPoint body = MagneticToBody(rel, YawDeg(pose.yaw));
    return sensor.extrinsics.Inverse(body);
}

nlohmann::json Vec(const Vec3& v) { return { v.x(), v.y(), v.z() }; }

} // namespace

WorldTemplate ParseWorldTemplate(const std::string& name)
{
    if (name == "corridor")
        return WorldTemplate::Corridor;
    if (name == "hospital")
        return WorldTemplate::Hospital;
    if (name == "random")
        return WorldTemplate::Random;
    throw InvalidArgument("unknown world template '" + name + "'");
}

std::string ToString(WorldTemplate layout)
{
    switch (layout) {
    case WorldTemplate::Corridor: return "corridor";
    case WorldTemplate::Hospital: return "hospital";
    case WorldTemplate::Random: return "random";
    }
    return "corridor";
}

const std::vector<std::string>& DefaultClassTable()
{
    static const std::vector<std::string> classes {
        "door", "sign", "pillar", "fire_hydrant", "extinguisher", "window", "person", "cart",
    };
    return classes;
}

std::set<ClassId> DefaultStaticClasses()
{
    return { 0, 1, 2, 3, 4, 5 };
}

void WorldSpec::Validate() const
{
    if (landmarkCount < 1)
        throw InvalidArgument("world needs at least one landmark");
    if (!(length > 0.0) || !(width > 0.0))
        throw InvalidArgument("world length and width must be positive");
    if (!(minSeparation >= 0.0))
        throw InvalidArgument("landmark separation must be non-negative");
    if (!classWeights.empty()) {
        if (classWeights.size() != DefaultStaticClasses().size())
            throw InvalidArgument("class weights must cover the six static classes");
        double sum = 0.0;
        for (const double w : classWeights) {
            if (!(w >= 0.0))
                throw InvalidArgument("class weights must be non-negative");
            sum += w;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw InvalidArgument("class weights must sum to 1");
    }
}

void TrajectorySpec::Validate() const
{
    if (!(speed > 0.0) || !(rate > 0.0) || !(maxDuration >= 0.0))
        throw InvalidArgument("trajectory speed and rate must be positive");
}

void PerturbationSpec::Validate() const
{
    auto probability = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!probability(pDrop) || !probability(pConfuse))
        throw InvalidArgument("p_drop and p_confuse must lie in [0, 1]");
    if (!(sigmaCenter >= 0.0) || !(sigmaYaw >= 0.0))
        throw InvalidArgument("noise levels must be non-negative");
    if (!std::isfinite(lateralOffset) || !std::isfinite(headingOffset))
        throw InvalidArgument("viewpoint offsets must be finite");
    if (nDynamic < 0)
        throw InvalidArgument("n_dynamic must be non-negative");
}

Extrinsics SensorSpec::DefaultCameraMount()
{
    Mat3 rotation;
    rotation << 0.0, 0.0, 1.0,
               -1.0, 0.0, 0.0,
                0.0, -1.0, 0.0;
    return Extrinsics(rotation, Vec3(0.2, 0.0, 0.5));
}

std::uint64_t DeriveSeed(std::uint64_t seed, std::uint64_t index)
{
    std::uint64_t z = seed + (index + 1) * 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

World GenerateWorld(const WorldSpec& spec)
{
    spec.Validate();

    World world;
    world.spec = spec;
    world.classes = DefaultClassTable();
    world.staticClasses = DefaultStaticClasses();

    const std::vector<double> weights = spec.classWeights.empty() ?
        std::vector<double> { 0.30, 0.20, 0.15, 0.10, 0.15, 0.10 } : spec.classWeights;

    auto rng = MakeEngine(spec.seed, RngStream::World);
    const double half = spec.width / 2.0;

    switch (spec.layout) {
    case WorldTemplate::Corridor:
        world.route = { Vec3(0.0, 0.0, 0.0), Vec3(spec.length, 0.0, 0.0) };
        world.boundsMin = Vec3(-0.5, -half, 0.0);
        world.boundsMax = Vec3(spec.length + 0.5, half, 3.0);
        break;
    case WorldTemplate::Hospital: {
        const double a = 0.3 * spec.length;
        const double b = 0.2 * spec.length;
        world.route = { Vec3(0, 0, 0), Vec3(a, 0, 0), Vec3(a, b, 0), Vec3(0, b, 0), Vec3(0, 0, 0) };
        world.boundsMin = Vec3(-half, -half, 0.0);
        world.boundsMax = Vec3(a + half, b + half, 3.0);
        break;
    }
    case WorldTemplate::Random: {
        const double band = spec.length / 8.0;
        world.route = { Vec3(0.0, 0.0, 0.0), Vec3(spec.length, 0.0, 0.0) };
        world.boundsMin = Vec3(-0.5, -band, 0.0);
        world.boundsMax = Vec3(spec.length + 0.5, band, 3.0);
        break;
    }
    }

    const double routeLength = RouteLength(world.route);
    auto place = [&]() {
        const double z = Uniform(rng, 0.3, 2.2);
        if (spec.layout == WorldTemplate::Random) {
            const double x = Uniform(rng, 0.0, spec.length);
            const double y = Uniform(rng, -spec.length / 8.0, spec.length / 8.0);
            return Vec3(x, y, z);
        }
        const double s = Uniform(rng, 0.0, routeLength);
        const double side = Uniform(rng, 0.0, 1.0) < 0.5 ? -1.0 : 1.0;
        const double recess = Uniform(rng, 0.0, 0.15);
        const auto [point, dir] = RouteAt(world.route, s);
        const Vec3 offset = LeftNormal(dir) * side * (half - recess);
        return Vec3(point.x() + offset.x(), point.y() + offset.y(), z);
    };

    /* Rejection sampling keeps landmarks resolvable by the association gate */
    constexpr int kAttempts = 10000;
    for (int i = 0; i < spec.landmarkCount; ++i) {
        Landmark lm;
        lm.id = i;
        lm.classId = SampleClass(rng, weights);
        int attempt = 0;
        for (;; ++attempt) {
            if (attempt == kAttempts)
                throw InvalidArgument("cannot place " + std::to_string(spec.landmarkCount) +
                                      " landmarks with the requested separation");
            lm.position = place();
            const bool clear = std::none_of(world.landmarks.begin(), world.landmarks.end(),
                [&](const Landmark& other) {
                    return (other.position - lm.position).norm() < spec.minSeparation;
                });
            if (clear)
                break;
        }
        world.landmarks.push_back(lm);
    }
    return world;
}

std::vector<std::vector<int>> GroundTruth::ObservationLabels(const DetectionStream& stream) const
{
    std::vector<std::size_t> sizes;
    sizes.reserve(stream.frames.size());
    for (const auto& frame : stream.frames)
        sizes.push_back(frame.observations.size());
    return this->ObservationLabels(sizes);
}

std::vector<std::vector<int>> GroundTruth::ObservationLabels(std::span<const std::size_t> observationsPerFrame) const
{
    std::vector<std::vector<int>> labels;
    labels.reserve(observationsPerFrame.size());
    for (const std::size_t n : observationsPerFrame)
        labels.emplace_back(n, -1);
    for (const auto& c : this->correspondences) {
        if (c.frame >= labels.size() || c.obs >= labels[c.frame].size())
            throw DataError("ground truth correspondence outside the stream");
        labels[c.frame][c.obs] = c.landmark;
    }
    return labels;
}

Session GenerateSession(const World& world, const SessionSpec& spec)
{
    spec.trajectory.Validate();
    spec.perturbation.Validate();
    const auto& pert = spec.perturbation;
    const auto& sensor = spec.sensor;

    Session session;
    session.stream.header.session = spec.name;
    session.stream.header.extrinsics = sensor.extrinsics;
    session.stream.header.classes = world.classes;
    session.truth.landmarks = world.landmarks;

    const double routeLength = RouteLength(world.route);
    const double step = spec.trajectory.speed / spec.trajectory.rate;
    std::size_t frameCount = static_cast<std::size_t>(std::floor(routeLength / step + 1e-9)) + 1;
    if (spec.trajectory.maxDuration > 0.0)
        frameCount = std::min(frameCount, static_cast<std::size_t>(
            std::floor(spec.trajectory.maxDuration * spec.trajectory.rate + 1e-9)) + 1);

    /* Poses */
    const double halfWidth = HalfWidth(world);
    for (std::size_t f = 0; f < frameCount; ++f) {
        const auto [point, dir] = RouteAt(world.route, static_cast<double>(f) * step);
        FramePose pose;
        pose.t = static_cast<double>(f) / spec.trajectory.rate;
        pose.position = point + LeftNormal(dir) * pert.lateralOffset;
        pose.yaw = NormalizeDegrees(PlanarHeadingDeg(dir) + pert.headingOffset);

        const Vec3& p = pose.position;
        if (p.x() < world.boundsMin.x() || p.y() < world.boundsMin.y() ||
            p.x() > world.boundsMax.x() || p.y() > world.boundsMax.y() ||
            DistanceToRoute(world.route, p) > halfWidth)
            throw InvalidArgument("trajectory leaves the world bounds at frame " + std::to_string(f));
        session.truth.frames.push_back(pose);
    }

    /* Transient distractors, drawn up front */
    struct Mover
    {
        DistractorTrack track;
        Vec3 origin;
        Vec3 velocity;
    };
    std::vector<Mover> movers;
    auto dynamics = MakeEngine(spec.seed, RngStream::Dynamics);
    const std::vector<ClassId> dynamicClasses { 6, 7 };
    const std::vector<ClassId> staticClasses(world.staticClasses.begin(), world.staticClasses.end());
    for (int i = 0; i < pert.nDynamic; ++i) {
        Mover m;
        m.track.id = i;
        m.track.firstFrame = std::uniform_int_distribution<std::size_t>(0, frameCount - 1)(dynamics);
        const auto life = std::uniform_int_distribution<std::size_t>(20, 40)(dynamics);
        m.track.lastFrame = std::min(frameCount - 1, m.track.firstFrame + life);
        /* Half outside the landmark classes, half disguised as landmarks */
        const auto pickDynamic = std::uniform_int_distribution<std::size_t>(0, dynamicClasses.size() - 1)(dynamics);
        const auto pickStatic = std::uniform_int_distribution<std::size_t>(0, staticClasses.size() - 1)(dynamics);
        m.track.classId = i % 2 == 0 ? dynamicClasses[pickDynamic] : staticClasses[pickStatic];

        const auto& spawn = session.truth.frames[m.track.firstFrame];
        const double distance = Uniform(dynamics, 3.0, 6.0);
        const double bearing = spawn.yaw + Uniform(dynamics, -20.0, 20.0);
        const double z = Uniform(dynamics, 0.5, 1.8);
        const double speed = Uniform(dynamics, 0.0, 0.8);
        const double heading = Uniform(dynamics, 0.0, 360.0);
        m.origin = spawn.position + HeadingVector(bearing) * distance;
        m.origin.z() = z;
        m.velocity = HeadingVector(heading) * speed;
        movers.push_back(m);
        session.truth.distractors.push_back(m.track);
    }

    auto dropRng = MakeEngine(spec.seed, RngStream::Drop);
    auto confuseRng = MakeEngine(spec.seed, RngStream::Confuse);
    auto noiseRng = MakeEngine(spec.seed, RngStream::Noise);
    auto confRng = MakeEngine(spec.seed, RngStream::Confidence);
    auto yawRng = MakeEngine(spec.seed, RngStream::Yaw);
    auto dynDropRng = MakeEngine(spec.seed, RngStream::DynamicDrop);
    auto dynNoiseRng = MakeEngine(spec.seed, RngStream::DynamicNoise);

    for (std::size_t f = 0; f < frameCount; ++f) {
        const auto& pose = session.truth.frames[f];
        DetectionFrame frame;
        frame.timestamp = pose.t;
        frame.yaw = YawDeg(pose.yaw + pert.sigmaYaw * Gaussian(yawRng));

        for (const auto& lm : world.landmarks) {
            /* Fixed draw budget per landmark and frame */
            const double uDrop = Uniform(dropRng, 0.0, 1.0);
            const double uConfuse = Uniform(confuseRng, 0.0, 1.0);
            const auto confusePick = std::uniform_int_distribution<std::size_t>(
                0, staticClasses.size() - 2)(confuseRng);
            const Vec3 noise(Gaussian(noiseRng), Gaussian(noiseRng), Gaussian(noiseRng));
            const double confidence = Uniform(confRng, 0.6, 1.0);

            const CameraPoint cam = ToCamera(lm.position, pose, sensor);
            if (!InFrustum(cam, sensor)) {
                ++session.truth.stats.outOfFrustum;
                continue;
            }
            if (uDrop < pert.pDrop) {
                ++session.truth.stats.dropped;
                continue;
            }

            ObjectObservation obs;
            obs.classId = lm.classId;
            if (uConfuse < pert.pConfuse) {
                std::vector<ClassId> others;
                for (const ClassId c : staticClasses)
                    if (c != lm.classId)
                        others.push_back(c);
                obs.classId = others[confusePick % others.size()];
            }
            obs.confidence = confidence;
            obs.centerCam = CameraPoint(cam.v + noise * pert.sigmaCenter);

            session.truth.correspondences.push_back({ f, frame.observations.size(), lm.id });
            frame.observations.push_back(std::move(obs));
            ++session.truth.stats.emitted;
        }

        for (const auto& m : movers) {
            const double uDrop = Uniform(dynDropRng, 0.0, 1.0);
            const Vec3 noise(Gaussian(dynNoiseRng), Gaussian(dynNoiseRng), Gaussian(dynNoiseRng));
            const double confidence = Uniform(dynDropRng, 0.5, 1.0);
            if (f < m.track.firstFrame || f > m.track.lastFrame)
                continue;

            const double dt = pose.t - session.truth.frames[m.track.firstFrame].t;
            const CameraPoint cam = ToCamera(m.origin + m.velocity * dt, pose, sensor);
            if (!InFrustum(cam, sensor) || uDrop < pert.pDrop)
                continue;

            ObjectObservation obs;
            obs.classId = m.track.classId;
            obs.confidence = confidence;
            obs.centerCam = CameraPoint(cam.v + noise * pert.sigmaCenter);
            session.truth.distractorObservations.push_back({ f, frame.observations.size(), m.track.id });
            frame.observations.push_back(std::move(obs));
        }

        session.stream.frames.push_back(std::move(frame));
    }
    return session;
}

SessionPair MakeSessionPair(const World& world, const SessionSpec& mapSpec, const SessionSpec& querySpec)
{
    SessionPair pair;
    pair.map = GenerateSession(world, mapSpec);
    pair.query = GenerateSession(world, querySpec);

    std::set<int> inMap;
    for (const auto& c : pair.map.truth.correspondences)
        inMap.insert(c.landmark);
    std::set<int> shared;
    for (const auto& c : pair.query.truth.correspondences)
        if (inMap.count(c.landmark))
            shared.insert(c.landmark);
    pair.sharedLandmarks.assign(shared.begin(), shared.end());
    return pair;
}

nlohmann::json GroundTruthToJson(const GroundTruth& truth)
{
    nlohmann::json landmarks = nlohmann::json::array();
    for (const auto& lm : truth.landmarks)
        landmarks.push_back({ { "id", lm.id }, { "cls", lm.classId }, { "pos", Vec(lm.position) } });

    nlohmann::json frames = nlohmann::json::array();
    for (const auto& f : truth.frames)
        frames.push_back({ { "t", f.t }, { "pose", { f.position.x(), f.position.y(), f.yaw } } });

    auto correspondences = [](const std::vector<Correspondence>& list, const char* idKey) {
        nlohmann::json out = nlohmann::json::array();
        for (const auto& c : list)
            out.push_back({ { "frame_idx", c.frame }, { "obs_idx", c.obs }, { idKey, c.landmark } });
        return out;
    };

    nlohmann::json distractors = nlohmann::json::array();
    for (const auto& d : truth.distractors)
        distractors.push_back({ { "id", d.id }, { "cls", d.classId },
                                { "first_frame", d.firstFrame }, { "last_frame", d.lastFrame } });

    return {
        { "landmarks", std::move(landmarks) },
        { "frames", std::move(frames) },
        { "correspondences", correspondences(truth.correspondences, "landmark_id") },
        { "distractors", std::move(distractors) },
        { "distractor_obs", correspondences(truth.distractorObservations, "distractor_id") },
        { "stats", { { "emitted", truth.stats.emitted },
                     { "dropped", truth.stats.dropped },
                     { "out_of_frustum", truth.stats.outOfFrustum } } },
    };
}

GroundTruth GroundTruthFromJson(const nlohmann::json& doc)
{
    try {
        GroundTruth truth;
        for (const auto& item : doc.at("landmarks")) {
            const auto& pos = item.at("pos");
            truth.landmarks.push_back({ item.at("id").get<int>(), item.at("cls").get<ClassId>(),
                                        Vec3(pos.at(0).get<double>(), pos.at(1).get<double>(),
                                             pos.at(2).get<double>()) });
        }
        for (const auto& item : doc.at("frames")) {
            const auto& pose = item.at("pose");
            FramePose f;
            f.t = item.at("t").get<double>();
            f.position = Vec3(pose.at(0).get<double>(), pose.at(1).get<double>(), 0.0);
            f.yaw = pose.at(2).get<double>();
            truth.frames.push_back(f);
        }
        for (const auto& item : doc.at("correspondences"))
            truth.correspondences.push_back({ item.at("frame_idx").get<std::size_t>(),
                                              item.at("obs_idx").get<std::size_t>(),
                                              item.at("landmark_id").get<int>() });
        if (doc.contains("distractors"))
            for (const auto& item : doc.at("distractors"))
                truth.distractors.push_back({ item.at("id").get<int>(), item.at("cls").get<ClassId>(),
                                              item.at("first_frame").get<std::size_t>(),
                                              item.at("last_frame").get<std::size_t>() });
        if (doc.contains("distractor_obs"))
            for (const auto& item : doc.at("distractor_obs"))
                truth.distractorObservations.push_back({ item.at("frame_idx").get<std::size_t>(),
                                                         item.at("obs_idx").get<std::size_t>(),
                                                         item.at("distractor_id").get<int>() });
        if (doc.contains("stats")) {
            const auto& stats = doc.at("stats");
            truth.stats.emitted = stats.at("emitted").get<std::size_t>();
            truth.stats.dropped = stats.at("dropped").get<std::size_t>();
            truth.stats.outOfFrustum = stats.at("out_of_frustum").get<std::size_t>();
        }
        return truth;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed ground truth: ") + e.what());
    }
}

void SaveGroundTruth(const GroundTruth& truth, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw DataError("cannot open " + path.string() + " for writing");
    out << CanonicalDump(GroundTruthToJson(truth), 17);
}

GroundTruth LoadGroundTruth(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw DataError("cannot open ground truth " + path.string());
    try {
        return GroundTruthFromJson(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError("ground truth " + path.string() + " is not valid JSON: " + e.what());
    }
}

} // namespace oltsm
