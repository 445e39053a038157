#include <benchmark/benchmark.h>

#include <set>

#include "common.hpp"
#include "oltsm/descriptor.hpp"
#include "oltsm/matching.hpp"

using namespace oltsm;

static void BM_MatchNode(benchmark::State& state)
{
    const auto map = bench::BuildCorridorMap(0.7 * state.range(0), static_cast<int>(state.range(0)));
    const auto index = ExtractAll(map);
    std::vector<const SceneDescriptor*> queries;
    for (const auto& [id, d] : index)
        queries.push_back(&d);
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(MatchNode(*queries[i], index));
        i = (i + 1) % queries.size();
    }
}
BENCHMARK(BM_MatchNode)->Arg(100)->Arg(500)->Unit(benchmark::kMicrosecond);

static void BM_Localize(benchmark::State& state)
{
    const auto map = bench::BuildCorridorMap(350.0, 500);
    const auto index = ExtractAll(map);
    std::vector<NodeId> roots;
    for (const auto& [id, node] : map.nodes())
        if (roots.size() < 5)
            roots.push_back(id);
    const auto query = map.InducedSubgraph(std::set<NodeId>(roots.begin(), roots.end()));
    const MatchConfig config;
    for (auto _ : state)
        benchmark::DoNotOptimize(Localize(query, roots, index, config));
}
BENCHMARK(BM_Localize)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
