// Model-output parsing throughput: bulleted lists, answer spans, and
// embedded JSON extraction over realistic reply sizes.
#include <benchmark/benchmark.h>

#include <string>

#include "facet/parsing.hpp"

namespace {

std::string bulleted_reply(std::size_t items) {
    std::string text = "Sure! Here are the clustering criteria you asked for:\n";
    for (std::size_t i = 0; i < items; ++i)
        text += "* Criterion number " + std::to_string(i) + " with a longer tail\n";
    text += "Let me know if you need anything else.";
    return text;
}

void BM_ParseBulletedList(benchmark::State& state) {
    auto text = bulleted_reply(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        auto items = facet::parse_bulleted_list(text);
        benchmark::DoNotOptimize(items.size());
    }
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}

void BM_ExtractAnswerSpan(benchmark::State& state) {
    std::string text(static_cast<std::size_t>(state.range(0)), 'x');
    text += " *Home Cooking* trailing prose";
    for (auto _ : state) {
        auto span = facet::extract_answer_span(text);
        benchmark::DoNotOptimize(span.size());
    }
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}

void BM_ExtractJsonObject(benchmark::State& state) {
    std::string text = "The hierarchy is ";
    text += "{\"level 1\": [\"A\"], \"level 2\": [\"B\", \"C\"], \"level 3\": [";
    for (int i = 0; i < state.range(0); ++i) {
        if (i > 0) text += ", ";
        text += "\"fine " + std::to_string(i) + "\"";
    }
    text += "]} as requested.";
    for (auto _ : state) {
        auto object = facet::extract_json_object(text);
        benchmark::DoNotOptimize(object.size());
    }
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}

} // namespace

BENCHMARK(BM_ParseBulletedList)->RangeMultiplier(4)->Range(4, 256);
BENCHMARK(BM_ExtractAnswerSpan)->RangeMultiplier(8)->Range(64, 32768);
BENCHMARK(BM_ExtractJsonObject)->RangeMultiplier(4)->Range(4, 256);

BENCHMARK_MAIN();
