#include <benchmark/benchmark.h>

#include <vector>

#include "axdram/snn.hpp"

using namespace axdram;

namespace {

SnnModel model(std::size_t n_exc) {
    SnnParams p;
    p.n_exc = n_exc;
    return SnnModel::initialize(p, 3);
}

std::vector<std::uint8_t> blob() {
    std::vector<std::uint8_t> px(784, 0);
    for (std::size_t r = 10; r < 18; ++r)
        for (std::size_t c = 10; c < 18; ++c) px[r * 28 + c] = 255;
    return px;
}

void BM_LifStep(benchmark::State& state) {
    const auto m = model(static_cast<std::size_t>(state.range(0)));
    auto s = NeuronState::at_rest(m);
    std::vector<std::uint32_t> in;
    for (std::uint32_t i = 0; i < 784; i += 16) in.push_back(i);
    for (auto _ : state) benchmark::DoNotOptimize(lif_step(s, in, m.weights, m.params, false));
}
BENCHMARK(BM_LifStep)->Arg(100)->Arg(400);

void BM_PresentInference(benchmark::State& state) {
    const auto m = model(100);
    const auto px = blob();
    std::uint64_t seed = 0;
    for (auto _ : state) benchmark::DoNotOptimize(present(m, px, ++seed));
}
BENCHMARK(BM_PresentInference);

void BM_PresentLearning(benchmark::State& state) {
    auto m = model(100);
    const auto px = blob();
    std::uint64_t seed = 0;
    for (auto _ : state) benchmark::DoNotOptimize(present(m, px, ++seed, true));
}
BENCHMARK(BM_PresentLearning);

}  // namespace
