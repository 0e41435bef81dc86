#include <benchmark/benchmark.h>

#include "axdram/energy.hpp"
#include "axdram/weight_storage.hpp"

using namespace axdram;

namespace {

const DramGeometry kGeom{1, 1, 1, 8, 16, 64, 128, 32};

void BM_TraceBaseline(benchmark::State& state) {
    const auto plan = plan_baseline(static_cast<std::size_t>(state.range(0)) * 784, kGeom);
    for (auto _ : state) benchmark::DoNotOptimize(trace_inference(plan));
    state.SetItemsProcessed(state.iterations() * plan.size());
}
BENCHMARK(BM_TraceBaseline)->Arg(100)->Arg(400);

void BM_TraceSafe(benchmark::State& state) {
    const auto plan = plan_safe_subarray(static_cast<std::size_t>(state.range(0)) * 784, kGeom,
                                         SubarrayRates::uniform(kGeom, 0.0), 1e-4);
    for (auto _ : state) benchmark::DoNotOptimize(trace_inference(plan));
    state.SetItemsProcessed(state.iterations() * plan.size());
}
BENCHMARK(BM_TraceSafe)->Arg(100)->Arg(400);

void BM_BurstReplay(benchmark::State& state) {
    const auto trace = trace_inference(plan_baseline(100 * 784, kGeom));
    const auto timing = nominal_cycle_timing();
    for (auto _ : state) benchmark::DoNotOptimize(burst_cycles(trace, timing));
    state.SetItemsProcessed(state.iterations() * trace.size());
}
BENCHMARK(BM_BurstReplay);

}  // namespace
