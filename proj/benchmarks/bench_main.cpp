#include <benchmark/benchmark.h>

#include <random>

#include "ptfa/analytics.hpp"
#include "ptfa/facilitation.hpp"
#include "ptfa/simulation.hpp"
#include "ptfa/storage.hpp"

namespace {

using namespace ptfa;

std::vector<Post> transcript(std::size_t n) {
    std::vector<Post> log;
    for (std::size_t i = 0; i < n; ++i) {
        Post p;
        p.session_id = "b";
        p.seq = static_cast<std::int64_t>(i + 1);
        p.ts_ms = static_cast<Millis>(i) * 1'000;
        p.author = Author::participant("P" + std::to_string(1 + i % 3));
        p.text = "an idea about a picnic in the park number " + std::to_string(i);
        log.push_back(std::move(p));
    }
    return log;
}

void BM_SelectIntervention(benchmark::State& state) {
    const auto registry = HatRegistry::defaults();
    std::vector<HatDecision> decisions;
    for (Hat h : kAllHats) decisions.push_back(HatDecision::respond(h, "text"));
    const std::vector<Hat> recent{Hat::Green, Hat::Yellow};
    for (auto _ : state) {
        benchmark::DoNotOptimize(select_intervention(decisions, Phase::Divergent, recent, registry));
    }
}
BENCHMARK(BM_SelectIntervention);

void BM_IsSentinel(benchmark::State& state) {
    const std::string inputs[] = {"Good", " good. ", "GOOD", "Good idea, but what about cost?"};
    std::size_t i = 0;
    for (auto _ : state) benchmark::DoNotOptimize(is_sentinel(inputs[i++ % 4]));
}
BENCHMARK(BM_IsSentinel);

void BM_AssemblePrompt(benchmark::State& state) {
    const auto registry = HatRegistry::defaults();
    const auto log = transcript(static_cast<std::size_t>(state.range(0)));
    PromptOptions opts;
    opts.topic_text = std::string(topic(0).prompt_text);
    opts.elapsed_ms = 300'000;
    for (auto _ : state) {
        const auto window = context_window(log, llm::ContextBudget{});
        benchmark::DoNotOptimize(assemble_prompt(registry.at(Hat::Black), window, Phase::Divergent, opts));
    }
}
BENCHMARK(BM_AssemblePrompt)->Arg(20)->Arg(200);

void BM_ComputeMetrics(benchmark::State& state) {
    const auto log = transcript(static_cast<std::size_t>(state.range(0)));
    const auto data = render_dataset(log, SessionInfo{"b", 0, FacilitationModel::Model1, 3, 1'200'000});
    for (auto _ : state) benchmark::DoNotOptimize(compute_metrics(data));
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * data.size()));
}
BENCHMARK(BM_ComputeMetrics)->Arg(100)->Arg(1000);

void BM_VirtualSession(benchmark::State& state) {
    ParticipantScript script;
    for (int i = 0; i < 60; ++i) script.posts.push_back({i * 19'000, i % 3, "message " + std::to_string(i)});
    script.llm_default = {"Good", "What else?", "Good", "Which one?"};
    for (auto _ : state) {
        SimulationOptions o;
        o.info = SessionInfo{"b", 0, FacilitationModel::Model1, 3, 1'200'000};
        o.provider = script_provider(script);
        benchmark::DoNotOptimize(run_session(o, script));
    }
}
BENCHMARK(BM_VirtualSession)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
