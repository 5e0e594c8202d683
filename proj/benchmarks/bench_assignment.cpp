// Hungarian solver cost across matrix sizes; confusion tables in practice
// stay under ~100 clusters, the larger sizes probe the O(n^3) headroom.
#include <benchmark/benchmark.h>

#include <vector>

#include "facet/assignment.hpp"
#include "facet/digest.hpp"

namespace {

std::vector<std::vector<long long>> random_matrix(std::size_t n, std::uint64_t seed) {
    facet::SplitMix64 rng(seed);
    std::vector<std::vector<long long>> weights(n, std::vector<long long>(n));
    for (auto& row : weights)
        for (auto& cell : row) cell = static_cast<long long>(rng.next_below(1000));
    return weights;
}

void BM_MaxWeightAssignment(benchmark::State& state) {
    auto n = static_cast<std::size_t>(state.range(0));
    auto weights = random_matrix(n, 42);
    for (auto _ : state) {
        auto result = facet::max_weight_assignment(weights);
        benchmark::DoNotOptimize(result.total);
    }
    state.SetComplexityN(state.range(0));
}

} // namespace

BENCHMARK(BM_MaxWeightAssignment)->RangeMultiplier(4)->Range(4, 256)->Complexity();

BENCHMARK_MAIN();
