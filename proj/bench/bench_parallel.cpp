// Serial vs OpenMP comparison for the voting and scoring kernels.

#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "thermon/grouping.hpp"
#include "thermon/pipeline.hpp"
#include "thermon/scorer.hpp"
#include "thermon/simulator.hpp"
#include "thermon/telemetry.hpp"

using namespace thermon;

namespace {

struct BenchData {
    RoomLayout layout;
    AlignedTable table;
    std::vector<GroupSpec> groups;
    VoteConfig vote_cfg;
};

const BenchData& data() {
    static const BenchData d = [] {
        BenchData b;
        b.layout = build_layout(4, 16, 24.0, 60);
        ScenarioSpec spec;
        spec.duration = 2000;
        spec.seed = 42;
        spec.injections.push_back(
            {InjectionKind::hotspot_attack, {"rack:1:4"}, 900, 60, 8.0});
        LabeledTrace trace = simulate(b.layout, spec);
        b.table = align(trace, 60, 2);
        b.groups = build_groups(b.layout.sensors, GroupingStrategy::by_aisle_height);
        b.vote_cfg.tau_fixed = 2.0;
        return b;
    }();
    return d;
}

void BM_VoteTable(benchmark::State& state) {
    const bool parallel = state.range(0) != 0;
    const BenchData& d = data();
    for (auto _ : state) {
        GroupVotes votes = vote_table(d.table, d.groups, d.vote_cfg, parallel);
        benchmark::DoNotOptimize(votes.faulty.data());
    }
}

void BM_AggregateGroups(benchmark::State& state) {
    const bool parallel = state.range(0) != 0;
    const BenchData& d = data();
    const GroupVotes votes = vote_table(d.table, d.groups, d.vote_cfg, true);
    for (auto _ : state) {
        MultivariateFrame frame = aggregate_groups(d.table, votes, parallel);
        benchmark::DoNotOptimize(frame.series.data());
    }
}

void BM_FullDetect(benchmark::State& state) {
    const bool parallel = state.range(0) != 0;
    const BenchData& d = data();
    PipelineConfig cfg;
    cfg.grouping.strategy = GroupingStrategy::by_aisle_height;
    cfg.grouping.vote.tau_fixed = 2.0;
    ScenarioSpec spec;
    spec.duration = 2000;
    spec.seed = 42;
    LabeledTrace trace = simulate(d.layout, spec);
    for (auto _ : state) {
        DetectResult result = run_detect(cfg, trace, d.layout.sensors, parallel);
        benchmark::DoNotOptimize(result.health.data());
    }
}

BENCHMARK(BM_VoteTable)->Arg(0)->Name("vote_table/serial");
BENCHMARK(BM_VoteTable)->Arg(1)->Name("vote_table/openmp");
BENCHMARK(BM_AggregateGroups)->Arg(0)->Name("aggregate_groups/serial");
BENCHMARK(BM_AggregateGroups)->Arg(1)->Name("aggregate_groups/openmp");
BENCHMARK(BM_FullDetect)->Arg(0)->Name("full_detect/serial");
BENCHMARK(BM_FullDetect)->Arg(1)->Name("full_detect/openmp");

}  // namespace

BENCHMARK_MAIN();
