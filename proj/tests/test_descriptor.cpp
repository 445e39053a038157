#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <numeric>
#include <set>
#include <tuple>

#include "oltsm/descriptor.hpp"
#include "oltsm/error.hpp"
#include "oltsm/map_io.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace oltsm;

namespace {

using test::NodeSeq;
using test::BruteForcePaths;

/* (code, vectors) records of a descriptor, order-free */
using Record = std::pair<std::uint64_t, std::vector<std::array<double, 3>>>;

std::vector<Record> Records(const SceneDescriptor& d)
{
    std::vector<Record> out;
    for (std::size_t p = 0; p < d.PathCount(); ++p) {
        Record r { d.desS[p], {} };
        for (const auto& v : d.Vectors(p))
            r.second.push_back({ v.x(), v.y(), v.z() });
        out.push_back(r);
    }
    std::sort(out.begin(), out.end());
    return out;
}

SemanticGraph Triangle()
{
    SemanticGraph g({ "door", "sign", "pillar" });
    LandmarkNode n;
    n.classId = 0;
    g.AddNode(n);
    n.classId = 1;
    g.AddNode(n);
    n.classId = 2;
    g.AddNode(n);
    g.AddEdge(0, 1, Vec3(2, 0, 0));
    g.AddEdge(1, 2, Vec3(0, 3, 0));
    g.AddEdge(0, 2, Vec3(2, 3, 0));
    return g;
}

} // namespace

TEST(EnumeratePaths, IsolatedRootIsOnePaddedPath)
{
    SemanticGraph g(test::Classes(2));
    g.AddNode({});
    const auto paths = EnumeratePaths(g, 0, 3);
    ASSERT_EQ(paths.size(), 1u);
    EXPECT_EQ(paths[0].nodes, (NodeSeq { 0, kInvalidNode, kInvalidNode }));
    EXPECT_EQ(paths[0].classes, (std::vector<ClassId> { 0, 2, 2 }));
    EXPECT_EQ(paths[0].vectors, (std::vector<Vec3> { Vec3::Zero(), Vec3::Zero() }));
}

TEST(EnumeratePaths, Triangle)
{
    std::set<NodeSeq> got;
    for (const auto& p : EnumeratePaths(Triangle(), 0, 3))
        got.insert(p.nodes);
    EXPECT_EQ(got, (std::set<NodeSeq> { { 0, 1, 2 }, { 0, 2, 1 } }));
}

TEST(EnumeratePaths, PathGraph)
{
    SemanticGraph g(test::Classes(1));
    for (int i = 0; i < 4; ++i)
        g.AddNode({});
    for (NodeId i = 0; i < 3; ++i)
        g.AddEdge(i, i + 1, Vec3(1, 0, 0));
    const auto paths = EnumeratePaths(g, 0, 3);
    ASSERT_EQ(paths.size(), 1u);
    EXPECT_EQ(paths[0].nodes, (NodeSeq { 0, 1, 2 }));
}

TEST(EnumeratePaths, MatchesBruteForceOnRandomGraphs)
{
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + trial % 12;
        const double p = test::Uniform(rng, 0.05, 0.6);
        const auto rg = test::MakeRandomGraph(rng, n, p, 4);
        for (const auto& [root, node] : rg.graph.nodes()) {
            std::vector<NodeSeq> got;
            for (const auto& path : EnumeratePaths(rg.graph, root, 3)) {
                got.push_back(path.nodes);
                for (std::size_t i = 0; i + 1 < path.nodes.size(); ++i) {
                    const Vec3 expected = path.nodes[i + 1] == kInvalidNode ?
                        Vec3::Zero() : Vec3(rg.positions[path.nodes[i + 1]] - rg.positions[path.nodes[i]]);
                    ASSERT_LT((path.vectors[i] - expected).norm(), 1e-12);
                }
            }
            std::sort(got.begin(), got.end());
            ASSERT_EQ(got, BruteForcePaths(rg.graph, root, 3)) << "trial " << trial << " root " << root;
        }
    }
}

TEST(EnumeratePaths, LongerPathsMatchBruteForce)
{
    std::mt19937_64 rng(32);
    for (int trial = 0; trial < 30; ++trial) {
        const auto rg = test::MakeRandomGraph(rng, 8, 0.35, 3);
        std::vector<NodeSeq> got;
        for (const auto& path : EnumeratePaths(rg.graph, 0, 4))
            got.push_back(path.nodes);
        std::sort(got.begin(), got.end());
        EXPECT_EQ(got, BruteForcePaths(rg.graph, 0, 4));
    }
}

TEST(EncodeClassSequence, Examples)
{
    const std::vector<ClassId> zeros { 0, 0, 0 };
    EXPECT_EQ(EncodeClassSequence(zeros, 1), 0u);
    EXPECT_EQ(EncodeClassSequence(zeros, 10), 0u);
    const std::vector<ClassId> seq { 2, 5, 7 };
    EXPECT_EQ(EncodeClassSequence(seq, 10), 304u);
}

TEST(EncodeClassSequence, BaseElevenHasNoCollisions)
{
    std::set<std::uint64_t> seen;
    for (ClassId a = 0; a <= 10; ++a)
        for (ClassId b = 0; b <= 10; ++b)
            for (ClassId c = 0; c <= 10; ++c) {
                const std::vector<ClassId> seq { a, b, c };
                EXPECT_TRUE(seen.insert(EncodeClassSequence(seq, 10)).second);
            }
    EXPECT_EQ(seen.size(), 1331u);
}

TEST(EncodeClassSequence, InjectiveForSmallAlphabets)
{
    for (std::size_t k = 1; k <= 4; ++k) {
        for (std::size_t r = 1; r <= 4; ++r) {
            std::set<std::uint64_t> seen;
            std::vector<ClassId> seq(r, 0);
            std::size_t total = 0;
            while (true) {
                seen.insert(EncodeClassSequence(seq, k));
                ++total;
                std::size_t d = 0;
                while (d < r && ++seq[d] > k)
                    seq[d++] = 0;
                if (d == r)
                    break;
            }
            EXPECT_EQ(seen.size(), total) << "k=" << k << " R=" << r;
        }
    }
}

TEST(EncodeClassSequence, RejectsBadInput)
{
    const std::vector<ClassId> big { 0, 4 };
    EXPECT_THROW(EncodeClassSequence(big, 3), InvalidArgument);
    EXPECT_THROW(EncodeClassSequence(big, 0), InvalidArgument);
    const std::vector<ClassId> longSeq(40, 1000);
    EXPECT_THROW(EncodeClassSequence(longSeq, 1000), InvalidArgument);
}

TEST(ExtractDescriptor, IsolatedNode)
{
    SemanticGraph g(test::Classes(3));
    LandmarkNode n;
    n.classId = 1;
    g.AddNode(n);
    const auto d = ExtractDescriptor(g, 0);
    EXPECT_EQ(d.rootClass, 1u);
    ASSERT_EQ(d.PathCount(), 1u);
    EXPECT_EQ(d.desS[0], 1u * 16 + 3 * 4 + 3);
    EXPECT_EQ(d.desD, (std::vector<Vec3> { Vec3::Zero(), Vec3::Zero() }));
}

TEST(ExtractDescriptor, TriangleHandValue)
{
    const auto d = ExtractDescriptor(Triangle(), 0);
    // door(0) -> sign(1) -> pillar(2): 0*16 + 1*4 + 2 = 6; door -> pillar -> sign: 0 + 8 + 1 = 9
    EXPECT_EQ(d.desS, (std::vector<std::uint64_t> { 6, 9 }));
    EXPECT_EQ(d.desD, (std::vector<Vec3> { Vec3(2, 0, 0), Vec3(0, 3, 0), Vec3(2, 3, 0), Vec3(0, -3, 0) }));
    EXPECT_EQ(d.pathNodes, (std::vector<NodeId> { 0, 1, 2, 0, 2, 1 }));
}

TEST(ExtractDescriptor, InvariantUnderIdPermutation)
{
    std::mt19937_64 rng(33);
    for (int trial = 0; trial < 50; ++trial) {
        const auto rg = test::MakeRandomGraph(rng, 10, 0.3, 4);
        std::vector<NodeId> perm(10);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);

        SemanticGraph relabeled(test::Classes(4));
        for (NodeId i = 0; i < 10; ++i) {
            LandmarkNode n = rg.graph.Node(i);
            n.id = perm[i];
            relabeled.AddNode(n);
        }
        for (const auto& [key, e] : rg.graph.edges())
            relabeled.AddEdge(perm[e.a], perm[e.b], e.dvec);

        for (NodeId i = 0; i < 10; ++i) {
            const auto a = ExtractDescriptor(rg.graph, i);
            const auto b = ExtractDescriptor(relabeled, perm[i]);
            EXPECT_EQ(a.desS, b.desS);
            EXPECT_EQ(Records(a), Records(b));
        }
    }
}

TEST(ExtractDescriptor, VectorsRotateWithTheGraph)
{
    std::mt19937_64 rng(34);
    for (int trial = 0; trial < 20; ++trial) {
        const auto rg = test::MakeRandomGraph(rng, 8, 0.4, 3);
        const Mat3 rot = test::RandomRotation(rng);
        SemanticGraph rotated(test::Classes(3));
        for (const auto& [id, n] : rg.graph.nodes())
            rotated.AddNode(n);
        for (const auto& [key, e] : rg.graph.edges())
            rotated.AddEdge(e.a, e.b, rot * e.dvec);
        for (NodeId i = 0; i < 8; ++i) {
            const auto a = ExtractDescriptor(rg.graph, i);
            const auto b = ExtractDescriptor(rotated, i);
            ASSERT_EQ(a.desS, b.desS);
            ASSERT_EQ(a.pathNodes, b.pathNodes);
            for (std::size_t v = 0; v < a.desD.size(); ++v)
                EXPECT_LT((rot * a.desD[v] - b.desD[v]).norm(), 1e-9);
        }
    }
}

TEST(ExtractDescriptor, RejectsUnknownRootAndShortPaths)
{
    const auto g = Triangle();
    EXPECT_THROW(ExtractDescriptor(g, 7), InvalidArgument);
    EXPECT_THROW(ExtractDescriptor(g, 0, { 1, 0, 0 }), InvalidArgument);
}

TEST(SampleWalks, SubsetOfEnumeratedPathsAndSeeded)
{
    std::mt19937_64 rng(35);
    const auto rg = test::MakeRandomGraph(rng, 12, 0.4, 3);
    std::set<NodeSeq> all;
    for (const auto& p : EnumeratePaths(rg.graph, 0, 3))
        all.insert(p.nodes);
    const auto a = SampleWalks(rg.graph, 0, 3, 10, 99);
    const auto b = SampleWalks(rg.graph, 0, 3, 10, 99);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].nodes, b[i].nodes);
        EXPECT_TRUE(all.count(a[i].nodes));
    }
    EXPECT_THROW(SampleWalks(rg.graph, 0, 3, 0, 1), InvalidArgument);
}

TEST(DescriptorCache, RoundTripAndKeying)
{
    std::mt19937_64 rng(36);
    const auto rg = test::MakeRandomGraph(rng, 15, 0.25, 4);
    const auto index = ExtractAll(rg.graph);
    const auto fp = MapFingerprint(rg.graph);
    const auto path = std::filesystem::temp_directory_path() / "oltsm_desc_cache_test.json";
    SaveDescriptorCache(index, fp, 3, path);

    DescriptorIndex loaded;
    ASSERT_TRUE(LoadDescriptorCache(path, fp, 3, loaded));
    ASSERT_EQ(loaded.size(), index.size());
    for (const auto& [id, d] : index) {
        EXPECT_EQ(loaded.at(id).desS, d.desS);
        EXPECT_EQ(loaded.at(id).pathNodes, d.pathNodes);
        for (std::size_t v = 0; v < d.desD.size(); ++v)
            EXPECT_LT((loaded.at(id).desD[v] - d.desD[v]).norm(), 1e-12);
    }
    DescriptorIndex other;
    EXPECT_FALSE(LoadDescriptorCache(path, fp + 1, 3, other));
    EXPECT_FALSE(LoadDescriptorCache(path, fp, 4, other));
    std::filesystem::remove(path);
    EXPECT_FALSE(LoadDescriptorCache(path, fp, 3, other));
}
