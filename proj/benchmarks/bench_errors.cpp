#include <benchmark/benchmark.h>

#include <vector>

#include "axdram/error_model.hpp"
#include "axdram/weight_storage.hpp"

using namespace axdram;

namespace {

const DramGeometry kGeom{1, 1, 1, 8, 16, 64, 128, 32};

void BM_GenerateMap(benchmark::State& state) {
    const double ber = 1.0 / static_cast<double>(state.range(0));
    std::uint64_t seed = 0;
    for (auto _ : state) benchmark::DoNotOptimize(generate_map(ErrorModelKind::M0, ber, kGeom, ++seed));
}
BENCHMARK(BM_GenerateMap)->Arg(10000)->Arg(1000);

void BM_Inject(benchmark::State& state) {
    const std::vector<float> w(100 * 784, 0.5F);
    const auto plan = plan_baseline(w.size(), kGeom);
    const auto stored = store(w, plan);
    const auto map = generate_map(ErrorModelKind::M0, 1e-3, kGeom, 1);
    std::uint64_t seed = 0;
    for (auto _ : state) benchmark::DoNotOptimize(inject(stored.image, map, plan, ++seed));
}
BENCHMARK(BM_Inject);

}  // namespace
