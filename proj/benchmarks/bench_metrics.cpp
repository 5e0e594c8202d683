// Scoring cost on synthetic runs: confusion building plus the aligned
// accuracy, across collection sizes and cluster counts.
#include <benchmark/benchmark.h>

#include <map>
#include <string>

#include "facet/digest.hpp"
#include "facet/metrics.hpp"
#include "facet/types.hpp"

namespace {

struct ScoringCase {
    facet::Substructure pred;
    std::map<std::string, std::string> gt;
};

ScoringCase synthetic_case(std::size_t images, std::size_t clusters, std::size_t labels) {
    facet::SplitMix64 rng(7);
    ScoringCase out;
    out.pred.criterion_id = "crit-bench";
    out.pred.granularity = facet::Granularity::mid;
    for (std::size_t i = 0; i < clusters; ++i)
        out.pred.cluster_names.push_back("c" + std::to_string(i));
    for (std::size_t i = 0; i < images; ++i) {
        std::string id = "img_" + std::to_string(i);
        out.pred.assignments[id] = "c" + std::to_string(rng.next_below(clusters));
        out.gt[id] = "g" + std::to_string(rng.next_below(labels));
    }
    return out;
}

void BM_BuildConfusion(benchmark::State& state) {
    auto c = synthetic_case(static_cast<std::size_t>(state.range(0)), 12, 10);
    for (auto _ : state) {
        auto table = facet::build_confusion(c.pred, c.gt);
        benchmark::DoNotOptimize(table.evaluated);
    }
}

void BM_ClusteringAccuracy(benchmark::State& state) {
    auto c = synthetic_case(5000, static_cast<std::size_t>(state.range(0)),
                            static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        double cacc = facet::clustering_accuracy(c.pred, c.gt);
        benchmark::DoNotOptimize(cacc);
    }
}

} // namespace

BENCHMARK(BM_BuildConfusion)->RangeMultiplier(4)->Range(256, 16384);
BENCHMARK(BM_ClusteringAccuracy)->RangeMultiplier(2)->Range(4, 64);

BENCHMARK_MAIN();
