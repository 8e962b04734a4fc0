// Serial reference vs OpenMP fan-out for rule scoring and batch analysis.
// The synthetic backend gets a fixed per-call latency so the numbers model a
// network-bound provider rather than string formatting.

#include <benchmark/benchmark.h>

#include <chrono>
#include <filesystem>
#include <map>

#include "maro/analysis.hpp"
#include "maro/domain.hpp"
#include "maro/judge.hpp"
#include "maro/synthetic.hpp"
#include "maro/tasks.hpp"

using namespace maro;

namespace {

constexpr std::chrono::microseconds kLatency{2000};

std::vector<ValidationTask> make_tasks(std::size_t n) {
    std::vector<ValidationTask> out;
    for (std::size_t i = 0; i < n; ++i) {
        ValidationTask t;
        t.query.id = "q" + std::to_string(i);
        t.query.domain = "bench";
        t.query.label = i % 2 ? Verdict::Real : Verdict::Fake;
        t.query.content = "Officials said item " + std::to_string(i) + " was reviewed.";
        t.query_report.item_id = t.query.id;
        t.query_report.composed_text = "stub report";
        t.gold = t.query.label;
        out.push_back(std::move(t));
    }
    return out;
}

std::vector<NewsItem> make_items(std::size_t n) {
    std::vector<NewsItem> out;
    for (std::size_t i = 0; i < n; ++i) {
        NewsItem it;
        it.id = "n" + std::to_string(i);
        it.domain = "bench";
        it.content = "A shocking claim number " + std::to_string(i) + " about the city council.";
        if (i % 2) it.comments = {"Source?", "Seen this before."};
        out.push_back(std::move(it));
    }
    return out;
}

void BM_ScoreRuleSerial(benchmark::State& state) {
    auto mock = make_synthetic_mock();
    mock->set_latency(kLatency);
    auto prompts = PromptRegistry::defaults();
    JudgeContext ctx{*mock, prompts, {}};
    auto tasks = make_tasks(static_cast<std::size_t>(state.range(0)));
    DecisionRule rule{1, "Weigh sourcing against tone.", RuleOrigin::Optimized};
    for (auto _ : state) benchmark::DoNotOptimize(score_rule_serial(rule, tasks, ctx));
}

void BM_ScoreRuleParallel(benchmark::State& state) {
    auto mock = make_synthetic_mock();
    mock->set_latency(kLatency);
    auto prompts = PromptRegistry::defaults();
    JudgeContext ctx{*mock, prompts, {}};
    auto tasks = make_tasks(static_cast<std::size_t>(state.range(0)));
    DecisionRule rule{1, "Weigh sourcing against tone.", RuleOrigin::Optimized};
    int workers = static_cast<int>(state.range(1));
    for (auto _ : state) benchmark::DoNotOptimize(score_rule(rule, tasks, ctx, workers));
}

void BM_AnalyzeSerial(benchmark::State& state) {
    auto mock = make_synthetic_mock();
    mock->set_latency(kLatency);
    auto prompts = PromptRegistry::defaults();
    AgentContext ctx{*mock, prompts, {}};
    auto items = make_items(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(analyze_batch_serial(items, nullptr, ctx));
}

void BM_AnalyzeParallel(benchmark::State& state) {
    auto mock = make_synthetic_mock();
    mock->set_latency(kLatency);
    auto prompts = PromptRegistry::defaults();
    AgentContext ctx{*mock, prompts, {}};
    auto items = make_items(static_cast<std::size_t>(state.range(0)));
    int workers = static_cast<int>(state.range(1));
    for (auto _ : state) benchmark::DoNotOptimize(analyze_batch(items, nullptr, ctx, workers));
}

}  // namespace

BENCHMARK(BM_ScoreRuleSerial)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ScoreRuleParallel)->Args({64, 2})->Args({64, 4})->Args({64, 8})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AnalyzeSerial)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AnalyzeParallel)->Args({8, 2})->Args({8, 4})->Args({8, 8})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
