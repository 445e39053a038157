#include <gtest/gtest.h>

#include <sstream>

#include "oltsm/error.hpp"
#include "oltsm/stream.hpp"

using namespace oltsm;

namespace {

const char* kHeader =
    R"({"classes":["door","sign"],"extrinsics":{"R":[1,0,0,0,1,0,0,0,1],"T":[0,0,0]},"session":"s"})";

DetectionStream Parse(const std::string& text)
{
    std::istringstream in(text);
    return ParseStream(in);
}

std::string ErrorOf(const std::string& text)
{
    try {
        Parse(text);
    } catch (const DataError& e) {
        return e.what();
    }
    return {};
}

} // namespace

TEST(Stream, ParsesHeaderAndFrames)
{
    const auto s = Parse(std::string(kHeader) + "\n" +
                         R"({"obs":[{"center_cam":[1,2,3],"cls":1,"color":"red","conf":0.9}],"t":0.1,"yaw_deg":370})" +
                         "\n\n" + R"({"obs":[],"t":0.2,"yaw_deg":-10})" + "\n");
    EXPECT_EQ(s.header.session, "s");
    EXPECT_EQ(s.header.classes.size(), 2u);
    ASSERT_EQ(s.frames.size(), 2u);
    EXPECT_DOUBLE_EQ(s.frames[0].yaw.degrees(), 10.0);
    EXPECT_DOUBLE_EQ(s.frames[1].yaw.degrees(), 350.0);
    const auto& o = s.frames[0].observations.at(0);
    EXPECT_EQ(o.classId, 1u);
    EXPECT_EQ(o.centerCam, CameraPoint(1, 2, 3));
    EXPECT_EQ(o.color, std::optional<std::string>("red"));
    EXPECT_TRUE(s.frames[1].observations.empty());
}

TEST(Stream, RoundTripIsByteStable)
{
    DetectionStream s;
    s.header.session = "rt";
    s.header.classes = { "door", "sign" };
    for (int i = 0; i < 20; ++i) {
        DetectionFrame f;
        f.timestamp = 0.1 * (i + 1);
        f.yaw = YawDeg(i * 17.3);
        f.observations.push_back({ static_cast<ClassId>(i % 2), 0.5 + i / 100.0, CameraPoint(i / 3.0, -1.0 / 7.0, 4.0), {} });
        s.frames.push_back(f);
    }
    std::ostringstream first;
    WriteStream(s, first);
    const auto back = Parse(first.str());
    std::ostringstream second;
    WriteStream(back, second);
    EXPECT_EQ(first.str(), second.str());
    EXPECT_EQ(back.frames[7].observations[0].centerCam, s.frames[7].observations[0].centerCam);
    EXPECT_EQ(back.frames[7].timestamp, s.frames[7].timestamp);
}

TEST(Stream, ErrorsNameTheLine)
{
    EXPECT_NE(ErrorOf("").find("line 1"), std::string::npos);
    EXPECT_NE(ErrorOf(std::string(kHeader) + "\n{oops\n").find("line 2"), std::string::npos);
    EXPECT_NE(ErrorOf(std::string(kHeader) + "\n" + R"({"obs":[],"t":0.1,"yaw_deg":0})" + "\n" +
                      R"({"obs":[{"center_cam":[1,2,3],"cls":5,"conf":0.9}],"t":0.2,"yaw_deg":0})")
                  .find("line 3"),
              std::string::npos);
}

TEST(Stream, RejectsInvalidFields)
{
    const std::string h = std::string(kHeader) + "\n";
    EXPECT_THROW(Parse(h + R"({"obs":[{"center_cam":[1,2],"cls":0,"conf":0.9}],"t":0.1,"yaw_deg":0})"), DataError);
    EXPECT_THROW(Parse(h + R"({"obs":[{"center_cam":[1,2,3],"cls":0,"conf":1.5}],"t":0.1,"yaw_deg":0})"), DataError);
    EXPECT_THROW(Parse(h + R"({"obs":[{"center_cam":[1,2,3],"cls":-1,"conf":0.5}],"t":0.1,"yaw_deg":0})"), DataError);
    EXPECT_THROW(Parse(h + R"({"obs":[],"yaw_deg":0})"), DataError);
    EXPECT_THROW(Parse(R"({"classes":["a"],"extrinsics":{"R":[2,0,0,0,1,0,0,0,1],"T":[0,0,0]},"session":"s"})"),
                 DataError);
}

TEST(Stream, MissingFileIsDataError)
{
    EXPECT_THROW(ReadStream("/nonexistent/oltsm.jsonl"), DataError);
}
