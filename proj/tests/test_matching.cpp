#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "oltsm/error.hpp"
#include "oltsm/matching.hpp"
#include "support.hpp"

using namespace oltsm;

namespace {

/* Nodes at fixed positions; edges between every pair closer than `reach` */
SemanticGraph GeometricGraph(const std::vector<Vec3>& positions, const std::vector<ClassId>& classes,
                             std::size_t classCount, double reach)
{
    SemanticGraph g(test::Classes(classCount));
    for (std::size_t i = 0; i < positions.size(); ++i) {
        LandmarkNode n;
        n.classId = classes[i];
        n.center = positions[i];
        g.AddNode(n);
    }
    for (NodeId a = 0; a < positions.size(); ++a)
        for (NodeId b = a + 1; b < positions.size(); ++b)
            if ((positions[b] - positions[a]).norm() < reach)
                g.AddEdge(a, b, positions[b] - positions[a]);
    return g;
}

/* Same graph with every edge vector perturbed */
SemanticGraph Jitter(const SemanticGraph& g, std::mt19937_64& rng, double sigma)
{
    std::normal_distribution<double> noise(0.0, sigma);
    SemanticGraph out(g.classTable());
    for (const auto& [id, n] : g.nodes())
        out.AddNode(n);
    for (const auto& [key, e] : g.edges())
        out.AddEdge(e.a, e.b, e.dvec + Vec3(noise(rng), noise(rng), noise(rng)));
    return out;
}

SemanticGraph Rotated(const SemanticGraph& g, const Mat3& rot)
{
    SemanticGraph out(g.classTable());
    for (const auto& [id, n] : g.nodes())
        out.AddNode(n);
    for (const auto& [key, e] : g.edges())
        out.AddEdge(e.a, e.b, rot * e.dvec);
    return out;
}

std::vector<NodeId> AllIds(const SemanticGraph& g)
{
    std::vector<NodeId> ids;
    for (const auto& [id, n] : g.nodes())
        ids.push_back(id);
    return ids;
}

/* root 0 of class 0 with two class-1 neighbours, each with a class-2 tail */
SemanticGraph Fork(const Vec3& left, const Vec3& right)
{
    SemanticGraph g(test::Classes(3));
    for (ClassId c : { 0u, 1u, 1u, 2u, 2u }) {
        LandmarkNode n;
        n.classId = c;
        g.AddNode(n);
    }
    g.AddEdge(0, 1, left);
    g.AddEdge(0, 2, right);
    g.AddEdge(1, 3, Vec3(0, 0, 1));
    g.AddEdge(2, 4, Vec3(0, 0, 1));
    return g;
}

} // namespace

TEST(EuclideanGate, Examples)
{
    const auto same = EuclideanGate(Vec3(1, 2, 3), Vec3(1, 2, 3), 0.5);
    EXPECT_EQ(same.distance, 0.0);
    EXPECT_TRUE(same.same);
    const auto far = EuclideanGate(Vec3::Zero(), Vec3(3, 4, 0), 0.5);
    EXPECT_DOUBLE_EQ(far.distance, 5.0);
    EXPECT_FALSE(far.same);
    EXPECT_TRUE(EuclideanGate(Vec3::Zero(), Vec3(0.3, 0, 0), 0.5).same);
}

TEST(DirectionCosine, Examples)
{
    EXPECT_DOUBLE_EQ(DirectionCosine(Vec3(1, 2, 3), Vec3(1, 2, 3)), 1.0);
    EXPECT_DOUBLE_EQ(DirectionCosine(Vec3(1, 0, 0), Vec3(0, 1, 0)), 0.0);
    EXPECT_NEAR(DirectionCosine(Vec3(1, 1, 0), Vec3(1, 0, 0)), 0.70710678, 1e-8);
    EXPECT_EQ(DirectionCosine(Vec3::Zero(), Vec3::Zero()), 1.0);
    EXPECT_EQ(DirectionCosine(Vec3::Zero(), Vec3(1, 0, 0)), 0.0);
}

TEST(DescriptorSimilarity, Examples)
{
    const std::vector<Vec3> m { Vec3(1, 2, 3), Vec3(-1, 0, 4) };
    const std::vector<Vec3> neg { Vec3(-1, -2, -3), Vec3(1, 0, -4) };
    EXPECT_DOUBLE_EQ(DescriptorSimilarity(m, m), 1.0);
    EXPECT_DOUBLE_EQ(DescriptorSimilarity(m, neg), -1.0);
    const std::vector<Vec3> a { Vec3(1, 0, 0) };
    const std::vector<Vec3> b { Vec3(1, 1, 0) };
    EXPECT_NEAR(DescriptorSimilarity(a, b), 0.70710678, 1e-8);
    EXPECT_EQ(DescriptorSimilarity(std::vector<Vec3> {}, std::vector<Vec3> {}), 0.0);
    EXPECT_THROW(DescriptorSimilarity(a, m), InvalidArgument);
}

TEST(DescriptorSimilarity, SymmetricAndBoundedProperty)
{
    std::mt19937_64 rng(41);
    for (int i = 0; i < 1000; ++i) {
        const std::size_t n = 1 + i % 6;
        std::vector<Vec3> m;
        std::vector<Vec3> v;
        for (std::size_t j = 0; j < n; ++j) {
            m.push_back(test::RandomVec(rng, 10.0));
            v.push_back(test::RandomVec(rng, 10.0));
        }
        const double s = DescriptorSimilarity(m, v);
        EXPECT_EQ(s, DescriptorSimilarity(v, m));
        EXPECT_GE(s, -1.0 - 1e-12);
        EXPECT_LE(s, 1.0 + 1e-12);
        EXPECT_EQ(DescriptorSimilarity(m, m), 1.0);
        /* independent formula */
        double dot = 0, mm = 0, vv = 0;
        for (std::size_t j = 0; j < n; ++j) {
            dot += m[j].dot(v[j]);
            mm += m[j].squaredNorm();
            vv += v[j].squaredNorm();
        }
        EXPECT_NEAR(s, dot / (std::sqrt(mm) * std::sqrt(vv)), 1e-12);
    }
}

TEST(MatchPaths, IdenticalDescriptorsPairEveryPathWithItself)
{
    std::mt19937_64 rng(42);
    const auto rg = test::MakeRandomGraph(rng, 10, 0.4, 3);
    for (NodeId root = 0; root < 10; ++root) {
        const auto d = ExtractDescriptor(rg.graph, root);
        const auto pairs = MatchPaths(d, d);
        ASSERT_EQ(pairs.size(), d.PathCount());
        for (const auto& p : pairs) {
            EXPECT_EQ(d.desS[p.query], d.desS[p.db]);
            EXPECT_DOUBLE_EQ(p.cosine, 1.0);
        }
    }
}

TEST(MatchPaths, DisjointClassesGiveNoPairs)
{
    SemanticGraph a(test::Classes(4));
    SemanticGraph b(test::Classes(4));
    for (ClassId c : { 0u, 1u }) {
        LandmarkNode n;
        n.classId = c;
        a.AddNode(n);
        n.classId = c + 2;
        b.AddNode(n);
    }
    a.AddEdge(0, 1, Vec3(1, 0, 0));
    b.AddEdge(0, 1, Vec3(1, 0, 0));
    EXPECT_TRUE(MatchPaths(ExtractDescriptor(a, 0), ExtractDescriptor(b, 0)).empty());
}

TEST(MatchPaths, SharedCodeGoesToTheBetterAlignedPath)
{
    /* query: two class-1 branches share one code; db: a single branch */
    const auto query = Fork(Vec3(1, 0, 0), Vec3(0, 1, 0));
    SemanticGraph db(test::Classes(3));
    for (ClassId c : { 0u, 1u, 2u }) {
        LandmarkNode n;
        n.classId = c;
        db.AddNode(n);
    }
    db.AddEdge(0, 1, Vec3(0.2, 1, 0));
    db.AddEdge(1, 2, Vec3(0, 0, 1));

    const auto qd = ExtractDescriptor(query, 0);
    const auto dd = ExtractDescriptor(db, 0);
    const auto pairs = MatchPaths(qd, dd);
    ASSERT_EQ(pairs.size(), 1u);

    /* brute-force oracle: the query path with the best similarity to the db path */
    std::size_t best = 0;
    double bestCos = -2.0;
    for (std::size_t q = 0; q < qd.PathCount(); ++q) {
        if (qd.desS[q] != dd.desS[0])
            continue;
        const double c = DescriptorSimilarity(qd.Vectors(q), dd.Vectors(0));
        if (c > bestCos) {
            bestCos = c;
            best = q;
        }
    }
    EXPECT_EQ(pairs[0].query, best);
    EXPECT_EQ(qd.Nodes(best)[1], 2u);
    EXPECT_DOUBLE_EQ(pairs[0].cosine, bestCos);
}

TEST(MatchPaths, RejectsIncompatibleDescriptors)
{
    std::mt19937_64 rng(43);
    const auto a = test::MakeRandomGraph(rng, 4, 0.5, 3);
    const auto b = test::MakeRandomGraph(rng, 4, 0.5, 4);
    EXPECT_THROW(MatchPaths(ExtractDescriptor(a.graph, 0), ExtractDescriptor(b.graph, 0)), InvalidArgument);
    EXPECT_THROW(MatchPaths(ExtractDescriptor(a.graph, 0), ExtractDescriptor(a.graph, 0, { 4, 0, 0 })),
                 InvalidArgument);
}

TEST(ScoreCandidate, SignConstraintDropsCounterOrientedPaths)
{
    const auto query = Fork(Vec3(1, 0, 0), Vec3(0, 1, 0));
    /* same topology, the left branch points the other way */
    const auto flipped = Fork(Vec3(-1, 0, 0), Vec3(0, 1, 0));
    const auto qd = ExtractDescriptor(query, 0);
    const auto match = ScoreCandidate(qd, ExtractDescriptor(flipped, 0));
    EXPECT_EQ(match.diagnostics.pairedPaths, 2u);
    EXPECT_EQ(match.diagnostics.matchedPaths, 1u);
    EXPECT_DOUBLE_EQ(match.diagnostics.matchedFraction, 0.5);
    EXPECT_DOUBLE_EQ(match.diagnostics.similarity, 1.0);
    EXPECT_DOUBLE_EQ(match.score, 0.5);

    /* every pairing of these two forks has a counter-oriented first edge */
    const auto narrow = ExtractDescriptor(Fork(Vec3(1, 0, 0), Vec3(1, 1, 0)), 0);
    const auto reversed = Fork(Vec3(-1, 0, 0), Vec3(-1, -1, 0));
    const auto none = ScoreCandidate(narrow, ExtractDescriptor(reversed, 0));
    EXPECT_EQ(none.diagnostics.matchedPaths, 0u);
    EXPECT_EQ(none.score, 0.0);
    EXPECT_TRUE(std::isinf(none.diagnostics.rootOffset));
}

TEST(ScoreCandidate, RootOffsetMeasuresVectorDistance)
{
    const auto a = Fork(Vec3(1, 0, 0), Vec3(0, 1, 0));
    const auto b = Fork(Vec3(2, 0, 0), Vec3(0, 2, 0));
    const auto match = ScoreCandidate(ExtractDescriptor(a, 0), ExtractDescriptor(b, 0));
    EXPECT_DOUBLE_EQ(match.diagnostics.rootOffset, 1.0);
    /* tails (0,0,1) are shared: dot 6, norms 4 and 10 */
    EXPECT_NEAR(match.score, 6.0 / std::sqrt(40.0), 1e-12);
}

TEST(MatchNode, SelfMatchRanksFirstWithScoreOne)
{
    std::mt19937_64 rng(44);
    const auto rg = test::MakeRandomGraph(rng, 15, 0.3, 4);
    const auto index = ExtractAll(rg.graph);
    for (const auto& [id, d] : index) {
        const auto ranked = MatchNode(d, index);
        ASSERT_FALSE(ranked.empty());
        EXPECT_EQ(ranked.front().db, id);
        EXPECT_DOUBLE_EQ(ranked.front().score, 1.0);
    }
}

TEST(MatchNode, AbsentClassGivesEmptyList)
{
    SemanticGraph db(test::Classes(3));
    LandmarkNode n;
    n.classId = 0;
    db.AddNode(n);
    SemanticGraph query(test::Classes(3));
    n.classId = 2;
    query.AddNode(n);
    EXPECT_TRUE(MatchNode(ExtractDescriptor(query, 0), ExtractAll(db)).empty());
}

TEST(MatchNode, PerturbedWorldRanksTrueNodeFirst)
{
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        std::mt19937_64 rng(seed);
        std::vector<Vec3> positions;
        std::vector<ClassId> classes;
        for (int i = 0; i < 10; ++i) {
            positions.emplace_back(test::Uniform(rng, 0, 12), test::Uniform(rng, -2, 2), test::Uniform(rng, 0, 2));
            classes.push_back(static_cast<ClassId>(rng() % 3));
        }
        const auto db = GeometricGraph(positions, classes, 3, 6.0);
        const auto query = Jitter(db, rng, 0.05);
        const auto index = ExtractAll(db);
        for (NodeId root = 0; root < 10; ++root) {
            const auto qd = ExtractDescriptor(query, root);
            const auto ranked = MatchNode(qd, index);

            /* brute force: score every candidate, then rank */
            std::vector<NodeMatch> oracle;
            for (const auto& [id, d] : index)
                if (d.rootClass == qd.rootClass) {
                    auto m = ScoreCandidate(qd, d);
                    if (m.diagnostics.matchedPaths > 0)
                        oracle.push_back(m);
                }
            std::sort(oracle.begin(), oracle.end(), [](const NodeMatch& l, const NodeMatch& r) {
                return l.score != r.score ? l.score > r.score : l.db < r.db;
            });
            ASSERT_EQ(ranked.size(), oracle.size());
            for (std::size_t i = 0; i < ranked.size(); ++i) {
                EXPECT_EQ(ranked[i].db, oracle[i].db);
                EXPECT_EQ(ranked[i].score, oracle[i].score);
            }
            ASSERT_FALSE(ranked.empty());
            EXPECT_EQ(ranked.front().db, root) << "seed " << seed;
            EXPECT_GT(ranked.front().score, 0.6);
        }
    }
}

TEST(MatchNode, AllowFilterRestrictsCandidates)
{
    std::mt19937_64 rng(45);
    const auto rg = test::MakeRandomGraph(rng, 12, 0.4, 2);
    const auto index = ExtractAll(rg.graph);
    const auto ranked = MatchNode(index.at(0), index, [](NodeId id) { return id != 0; });
    for (const auto& m : ranked)
        EXPECT_NE(m.db, 0u);
}

TEST(ScoreCandidate, InvariantUnderCommonRotation)
{
    std::mt19937_64 rng(46);
    for (int trial = 0; trial < 30; ++trial) {
        const auto a = test::MakeRandomGraph(rng, 8, 0.4, 3);
        const auto b = Jitter(a.graph, rng, 0.3);
        const Mat3 rot = test::RandomRotation(rng);
        const auto ra = Rotated(a.graph, rot);
        const auto rb = Rotated(b, rot);
        for (NodeId root = 0; root < 8; ++root) {
            const auto plain = ScoreCandidate(ExtractDescriptor(a.graph, root), ExtractDescriptor(b, root));
            const auto turned = ScoreCandidate(ExtractDescriptor(ra, root), ExtractDescriptor(rb, root));
            EXPECT_NEAR(plain.score, turned.score, 1e-9);
        }
    }
}

TEST(ScoreCandidate, ScoreStaysInUnitInterval)
{
    std::mt19937_64 rng(47);
    for (int trial = 0; trial < 100; ++trial) {
        const auto a = test::MakeRandomGraph(rng, 7, 0.5, 2);
        const auto b = test::MakeRandomGraph(rng, 7, 0.5, 2);
        for (NodeId root = 0; root < 7; ++root) {
            const auto m = ScoreCandidate(ExtractDescriptor(a.graph, root), ExtractDescriptor(b.graph, root));
            EXPECT_GE(m.score, 0.0);
            EXPECT_LE(m.score, 1.0 + 1e-12);
            EXPECT_LE(m.diagnostics.matchedPaths, m.diagnostics.pairedPaths);
        }
    }
}

TEST(Localize, SelfQueryIsAcceptedAndCorrect)
{
    std::mt19937_64 rng(48);
    const auto rg = test::MakeRandomGraph(rng, 20, 0.2, 4);
    const auto result = Localize(rg.graph, rg.graph, MatchConfig {});
    EXPECT_TRUE(result.accepted);
    EXPECT_DOUBLE_EQ(result.sceneScore, 1.0);
    ASSERT_EQ(result.matches.size(), 20u);
    for (const auto& m : result.matches)
        EXPECT_EQ(m.query, m.db);
}

TEST(Localize, DisjointWorldIsRejected)
{
    std::mt19937_64 rng(49);
    auto a = test::MakeRandomGraph(rng, 10, 0.3, 4);
    SemanticGraph other(test::Classes(4));
    for (const auto& [id, n] : a.graph.nodes()) {
        LandmarkNode m = n;
        m.classId = (n.classId + 1) % 2 + 2 * (n.classId < 2 ? 1 : 0);
        other.AddNode(m);
    }
    /* classes {0,1} become {2,3} and vice versa, and geometry is unrelated */
    const auto b = test::MakeRandomGraph(rng, 10, 0.3, 4);
    for (const auto& [key, e] : b.graph.edges())
        other.AddEdge(e.a, e.b, e.dvec);
    SemanticGraph isolated(test::Classes(4));
    for (ClassId c : { 0u, 1u, 2u, 3u }) {
        LandmarkNode n;
        n.classId = c;
        isolated.AddNode(n);
    }
    const auto none = Localize(isolated, SemanticGraph(test::Classes(4)), MatchConfig {});
    EXPECT_FALSE(none.accepted);
    EXPECT_EQ(none.sceneScore, 0.0);

    const auto result = Localize(a.graph, other, MatchConfig {});
    EXPECT_FALSE(result.accepted);
    EXPECT_LT(result.sceneScore, 0.6);
}

TEST(Localize, EmptyQueryIsAnError)
{
    const SemanticGraph g(test::Classes(2));
    EXPECT_THROW(Localize(g, std::span<const NodeId> {}, DescriptorIndex {}, MatchConfig {}), InvalidArgument);
}

TEST(Localize, RecordsStageTimes)
{
    std::mt19937_64 rng(50);
    const auto rg = test::MakeRandomGraph(rng, 10, 0.3, 3);
    const auto ids = AllIds(rg.graph);
    StageTimes times;
    Localize(rg.graph, ids, ExtractAll(rg.graph), MatchConfig {}, &times);
    EXPECT_EQ(times.descriptorMs.size(), ids.size());
    EXPECT_EQ(times.matchingMs.size(), ids.size());
}

TEST(MatchConfig, ValidatesRanges)
{
    MatchConfig c;
    c.tauAccept = 0.0;
    EXPECT_THROW(c.Validate(), InvalidArgument);
    c = {};
    c.pathLength = 1;
    EXPECT_THROW(c.Validate(), InvalidArgument);
    c = {};
    c.queryRadius = 1;
    EXPECT_THROW(c.Validate(), InvalidArgument);
}

/* Dropping query nodes can only remove context; averaged over 30 seeds the
 * scene score must not rise with the drop rate (margin 0.02) */
TEST(Localize, SceneScoreDegradesMonotonicallyWithDropout)
{
    const std::vector<double> rates { 0.0, 0.1, 0.2, 0.3, 0.4, 0.5 };
    std::vector<double> means;
    for (const double p : rates) {
        double sum = 0.0;
        for (std::uint64_t seed = 1; seed <= 30; ++seed) {
            std::mt19937_64 rng(seed);
            std::vector<Vec3> positions;
            std::vector<ClassId> classes;
            for (int i = 0; i < 30; ++i) {
                positions.emplace_back(test::Uniform(rng, 0, 40), test::Uniform(rng, -2, 2), test::Uniform(rng, 0, 2));
                classes.push_back(static_cast<ClassId>(rng() % 4));
            }
            const auto db = GeometricGraph(positions, classes, 4, 6.0);

            std::mt19937_64 drop(seed * 1000 + 7);
            std::set<NodeId> kept;
            std::vector<double> u(30);
            for (auto& x : u)
                x = test::Uniform(drop, 0.0, 1.0);
            for (NodeId i = 0; i < 30; ++i)
                if (u[i] >= p)
                    kept.insert(i);
            if (kept.empty())
                kept.insert(0);
            const auto query = db.InducedSubgraph(kept);
            sum += Localize(query, db, MatchConfig {}).sceneScore;
        }
        means.push_back(sum / 30.0);
    }
    for (std::size_t i = 1; i < means.size(); ++i)
        EXPECT_LE(means[i], means[i - 1] + 0.02) << "p_drop " << rates[i];
    EXPECT_GT(means.front(), means.back());
}
