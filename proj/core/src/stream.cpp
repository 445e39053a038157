#include "oltsm/stream.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "oltsm/canonical_json.hpp"
#include "oltsm/error.hpp"

namespace oltsm {

namespace {

std::vector<double> Numbers(const nlohmann::json& doc, std::size_t count, const char* what)
{
    if (!doc.is_array() || doc.size() != count)
        throw DataError(std::string(what) + " must be an array of " +
                        std::to_string(count) + " numbers");
    std::vector<double> values;
    values.reserve(count);
    for (const auto& item : doc) {
        if (!item.is_number())
            throw DataError(std::string(what) + " must contain only numbers");
        const double v = item.get<double>();
        if (!std::isfinite(v))
            throw DataError(std::string(what) + " must be finite");
        values.push_back(v);
    }
    return values;
}

const nlohmann::json& Field(const nlohmann::json& doc, const char* key)
{
    const auto it = doc.find(key);
    if (it == doc.end())
        throw DataError(std::string("missing field '") + key + "'");
    return *it;
}

StreamHeader ParseHeader(const nlohmann::json& doc)
{
    if (!doc.is_object())
        throw DataError("header must be a JSON object");

    StreamHeader header;
    const auto& session = Field(doc, "session");
    if (!session.is_string())
        throw DataError("'session' must be a string");
    header.session = session.get<std::string>();

    const auto& ext = Field(doc, "extrinsics");
    const auto r = Numbers(Field(ext, "R"), 9, "extrinsics.R");
    const auto t = Numbers(Field(ext, "T"), 3, "extrinsics.T");
    Mat3 rotation;
    rotation << r[0], r[1], r[2], r[3], r[4], r[5], r[6], r[7], r[8];
    try {
        header.extrinsics = Extrinsics(rotation, Vec3(t[0], t[1], t[2]));
    } catch (const InvalidArgument& e) {
        throw DataError(e.what());
    }

    const auto& classes = Field(doc, "classes");
    if (!classes.is_array())
        throw DataError("'classes' must be an array of strings");
    for (const auto& c : classes) {
        if (!c.is_string())
            throw DataError("'classes' must be an array of strings");
        header.classes.push_back(c.get<std::string>());
    }
    return header;
}

DetectionFrame ParseFrame(const nlohmann::json& doc, std::size_t classCount)
{
    if (!doc.is_object())
        throw DataError("frame must be a JSON object");

    DetectionFrame frame;
    const auto& t = Field(doc, "t");
    const auto& yaw = Field(doc, "yaw_deg");
    if (!t.is_number() || !yaw.is_number())
        throw DataError("'t' and 'yaw_deg' must be numbers");
    frame.timestamp = t.get<double>();
    if (!std::isfinite(frame.timestamp))
        throw DataError("'t' must be finite");
    try {
        frame.yaw = YawDeg(yaw.get<double>());
    } catch (const InvalidArgument& e) {
        throw DataError(e.what());
    }

    const auto& obs = Field(doc, "obs");
    if (!obs.is_array())
        throw DataError("'obs' must be an array");
    for (const auto& item : obs) {
        if (!item.is_object())
            throw DataError("observation must be an object");
        ObjectObservation o;
        const auto& cls = Field(item, "cls");
        if (!cls.is_number_integer() || cls.get<long long>() < 0)
            throw DataError("'cls' must be a non-negative integer");
        o.classId = cls.get<ClassId>();
        if (o.classId >= classCount)
            throw DataError("'cls' " + std::to_string(o.classId) + " outside the class table");
        const auto& conf = Field(item, "conf");
        if (!conf.is_number())
            throw DataError("'conf' must be a number");
        o.confidence = conf.get<double>();
        if (!(o.confidence >= 0.0 && o.confidence <= 1.0))
            throw DataError("'conf' must lie in [0, 1]");
        const auto c = Numbers(Field(item, "center_cam"), 3, "center_cam");
        o.centerCam = CameraPoint(c[0], c[1], c[2]);
        if (const auto color = item.find("color"); color != item.end()) {
            if (!color->is_string())
                throw DataError("'color' must be a string");
            o.color = color->get<std::string>();
        }
        frame.observations.push_back(std::move(o));
    }
    return frame;
}

} // namespace

DetectionStream ParseStream(std::istream& in)
{
    DetectionStream stream;
    std::string line;
    std::size_t lineNo = 0;
    bool haveHeader = false;

    while (std::getline(in, line)) {
        ++lineNo;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        try {
            const auto doc = nlohmann::json::parse(line);
            if (!haveHeader) {
                stream.header = ParseHeader(doc);
                haveHeader = true;
            } else {
                stream.frames.push_back(ParseFrame(doc, stream.header.classes.size()));
            }
        } catch (const nlohmann::json::exception& e) {
            throw DataError("line " + std::to_string(lineNo) + ": " + e.what());
        } catch (const DataError& e) {
            throw DataError("line " + std::to_string(lineNo) + ": " + e.what());
        }
    }

    if (!haveHeader)
        throw DataError("line 1: missing stream header");
    return stream;
}

DetectionStream ReadStream(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw DataError("cannot open stream " + path.string());
    return ParseStream(in);
}

std::string HeaderLine(const StreamHeader& header)
{
    const Mat3& r = header.extrinsics.rotation();
    const Vec3& t = header.extrinsics.translation();
    nlohmann::json doc;
    doc["session"] = header.session;
    doc["classes"] = header.classes;
    doc["extrinsics"] = {
        { "R", { r(0, 0), r(0, 1), r(0, 2), r(1, 0), r(1, 1), r(1, 2), r(2, 0), r(2, 1), r(2, 2) } },
        { "T", { t.x(), t.y(), t.z() } },
    };
    return CanonicalDump(doc, kStreamSignificantDigits);
}

std::string FrameLine(const DetectionFrame& frame)
{
    nlohmann::json obs = nlohmann::json::array();
    for (const auto& o : frame.observations) {
        nlohmann::json item = {
            { "cls", o.classId },
            { "conf", o.confidence },
            { "center_cam", { o.centerCam.x(), o.centerCam.y(), o.centerCam.z() } },
        };
        if (o.color)
            item["color"] = *o.color;
        obs.push_back(std::move(item));
    }
    nlohmann::json doc = {
        { "t", frame.timestamp },
        { "yaw_deg", frame.yaw.degrees() },
        { "obs", std::move(obs) },
    };
    return CanonicalDump(doc, kStreamSignificantDigits);
}

void WriteStream(const DetectionStream& stream, std::ostream& out)
{
    out << HeaderLine(stream.header) << '\n';
    for (const auto& frame : stream.frames)
        out << FrameLine(frame) << '\n';
}

void WriteStream(const DetectionStream& stream, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw DataError("cannot open " + path.string() + " for writing");
    WriteStream(stream, out);
}

} // namespace oltsm
