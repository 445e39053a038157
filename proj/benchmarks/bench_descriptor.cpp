#include <benchmark/benchmark.h>

#include "common.hpp"
#include "oltsm/descriptor.hpp"

using namespace oltsm;

static void BM_ExtractDescriptor(benchmark::State& state)
{
    const auto map = bench::BuildCorridorMap(0.7 * state.range(0), static_cast<int>(state.range(0)));
    std::vector<NodeId> ids;
    for (const auto& [id, node] : map.nodes())
        ids.push_back(id);
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(ExtractDescriptor(map, ids[i], {}));
        i = (i + 1) % ids.size();
    }
}
BENCHMARK(BM_ExtractDescriptor)->Arg(100)->Arg(500)->Unit(benchmark::kMicrosecond);

static void BM_ExtractAll(benchmark::State& state)
{
    const auto map = bench::BuildCorridorMap(0.7 * state.range(0), static_cast<int>(state.range(0)));
    for (auto _ : state)
        benchmark::DoNotOptimize(ExtractAll(map));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(map.nodes().size()));
}
BENCHMARK(BM_ExtractAll)->Arg(100)->Arg(500)->Unit(benchmark::kMillisecond);

static void BM_EncodeClassSequence(benchmark::State& state)
{
    const std::vector<ClassId> seq { 3, 1, 5 };
    for (auto _ : state)
        benchmark::DoNotOptimize(EncodeClassSequence(seq, 8));
}
BENCHMARK(BM_EncodeClassSequence);
BENCHMARK_MAIN();
