#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "axdram/dataset.hpp"
#include "axdram/errors.hpp"
#include "axdram/seeding.hpp"
#include "axdram/snn.hpp"
#include "test_support.hpp"

using namespace axdram;
using axdram::testing::mnist_dir;

namespace {

SnnParams small_params(std::size_t n_in, std::size_t n_exc) {
    SnnParams p;
    p.n_in = n_in;
    p.n_exc = n_exc;
    return p;
}

const Dataset& mnist_test() {
    static const Dataset d = load_idx(mnist_dir() / "t10k-images-idx3-ubyte", mnist_dir() / "t10k-labels-idx1-ubyte");
    return d;
}

const Dataset& mnist_train() {
    static const Dataset d = load_idx(mnist_dir() / "train-images-idx3-ubyte", mnist_dir() / "train-labels-idx1-ubyte");
    return d;
}

std::size_t total_spikes(const SnnParams& p, const std::vector<float>& w, const SpikeTrain& train) {
    SnnModel m(p);
    m.weights = w;
    NeuronState s = NeuronState::at_rest(m);
    std::size_t n = 0;
    for (const auto& in : train.active) n += lif_step(s, in, w, p, false).size();
    return n;
}

}  // namespace

TEST(Params, DefaultsValidate) {
    EXPECT_NO_THROW(SnnParams{}.validate());
    SnnParams p;
    p.v_reset = -50;
    EXPECT_THROW(p.validate(), ParameterError);
    p = SnnParams{};
    p.tau_mem_ms = 0;
    EXPECT_THROW(p.validate(), ParameterError);
    EXPECT_EQ(SnnParams{}.timesteps(), 350u);
    EXPECT_EQ(SnnParams{}.refractory_steps(), 5u);
}

TEST(RateEncode, ZeroImageIsSilent) {
    const std::vector<double> x(784, 0.0);
    const auto t = rate_encode(x, 350, 63.75, 1.0, 1);
    EXPECT_EQ(t.timesteps(), 350u);
    EXPECT_EQ(t.count(), 0u);
}

TEST(RateEncode, FullIntensityIsPoisson) {
    // one channel per seed, 2000 seeds
    const std::vector<double> x{1.0};
    const double lambda = 63.75 * 0.350;
    double sum = 0;
    const int n = 2000;
    for (int s = 0; s < n; ++s) sum += static_cast<double>(rate_encode(x, 350, 63.75, 1.0, s).count());
    EXPECT_NEAR(sum / n, lambda, 3 * std::sqrt(lambda / n));
    EXPECT_NEAR(lambda, 22.3, 0.05);
}

TEST(RateEncode, SameSeedSameTrain) {
    std::vector<double> x(100);
    for (int i = 0; i < 100; ++i) x[i] = i / 99.0;
    const auto a = rate_encode(x, 200, 63.75, 1.0, 9);
    const auto b = rate_encode(x, 200, 63.75, 1.0, 9);
    const auto c = rate_encode(x, 200, 63.75, 1.0, 10);
    EXPECT_EQ(a.active, b.active);
    EXPECT_NE(a.active, c.active);
}

TEST(RateEncode, RejectsOutOfRange) {
    const std::vector<double> x{1.5};
    EXPECT_THROW(rate_encode(x, 10, 63.75, 1.0, 1), ParameterError);
}

TEST(Lif, RestIsFixedPoint) {
    const auto p = small_params(3, 4);
    SnnModel m(p);
    auto s = NeuronState::at_rest(m);
    for (int t = 0; t < 100; ++t) EXPECT_TRUE(lif_step(s, {}, m.weights, p).empty());
    for (double v : s.v) EXPECT_DOUBLE_EQ(v, p.v_rest);
}

TEST(Lif, HugeWeightFiresAndResets) {
    const auto p = small_params(1, 2);
    std::vector<float> w{1000.0F, 0.0F};
    SnnModel m(p);
    auto s = NeuronState::at_rest(m);
    const std::uint32_t in[] = {0};
    const auto fired = lif_step(s, in, w, p);
    ASSERT_EQ(fired, (std::vector<std::uint32_t>{0}));
    EXPECT_DOUBLE_EQ(s.v[0], p.v_reset);
    EXPECT_EQ(s.refractory[0], p.refractory_steps());
    EXPECT_DOUBLE_EQ(s.theta[0], p.theta_plus_mv);
    // the silent neuron was pushed down by inhibition
    EXPECT_DOUBLE_EQ(s.v[1], p.v_rest - p.inhibition_mv);
}

TEST(Lif, LeakMatchesExponential) {
    auto p = small_params(1, 1);
    p.tau_mem_ms = 100.0;
    p.dt_ms = p.tau_mem_ms / 100.0;
    SnnModel m(p);
    auto s = NeuronState::at_rest(m);
    s.v[0] = p.v_rest + 10.0;
    for (int k = 1; k <= 500; ++k) {
        lif_step(s, {}, m.weights, p);
        const double exact = 10.0 * std::exp(-k * p.dt_ms / p.tau_mem_ms);
        ASSERT_NEAR((s.v[0] - p.v_rest) / exact, 1.0, 1e-6) << k;
    }
}

TEST(Lif, HalvesEveryTauLn2) {
    auto p = small_params(1, 1);
    p.tau_mem_ms = 100.0;
    p.dt_ms = 100.0 * std::log(2.0) / 50.0; // 50 steps per half-life
    SnnModel m(p);
    auto s = NeuronState::at_rest(m);
    s.v[0] = p.v_rest + 8.0;
    for (int k = 0; k < 50; ++k) lif_step(s, {}, m.weights, p);
    EXPECT_NEAR(s.v[0] - p.v_rest, 4.0, 1e-9);
    for (int k = 0; k < 50; ++k) lif_step(s, {}, m.weights, p);
    EXPECT_NEAR(s.v[0] - p.v_rest, 2.0, 1e-9);
}

TEST(Lif, RefractoryWindowRespected) {
    auto p = small_params(1, 3);
    std::vector<float> w{100.0F, 100.0F, 100.0F};
    SnnModel m(p);
    auto s = NeuronState::at_rest(m);
    const std::uint32_t in[] = {0};
    std::vector<std::vector<int>> times(3);
    for (int t = 0; t < 200; ++t)
        for (auto j : lif_step(s, in, w, p)) times[j].push_back(t);
    for (const auto& ts : times) {
        ASSERT_GE(ts.size(), 2u);
        for (std::size_t k = 1; k < ts.size(); ++k) EXPECT_GT(ts[k] - ts[k - 1], static_cast<int>(p.refractory_steps()));
    }
}

TEST(Lif, InhibitionNeverAddsSpikes) {
    const auto& d = mnist_test();
    auto p = small_params(784, 20);
    const auto model = SnnModel::initialize(p, 3);
    for (std::size_t s = 0; s < 10; ++s) {
        const auto train = rate_encode(d.image(s), p.duration_ms, p.max_rate_hz, p.dt_ms, 100 + s);
        std::size_t prev = std::numeric_limits<std::size_t>::max();
        for (double inh : {0.0, 1.0, 5.0, 17.5, 50.0, 100.0, 200.0}) {
            p.inhibition_mv = inh;
            const std::size_t n = total_spikes(p, model.weights, train);
            EXPECT_LE(n, prev) << "sample " << s << " inhibition " << inh;
            prev = n;
        }
    }
}

TEST(Stdp, NoSpikesNoChange) {
    const auto p = small_params(4, 3);
    std::vector<float> w(12, 0.5F);
    StdpTraces tr(4, 3);
    tr.advance({}, {}, p);
    stdp_update(w, tr, {}, {}, p);
    EXPECT_EQ(w, std::vector<float>(12, 0.5F));
}

TEST(Stdp, PreThenPostPotentiates) {
    const auto p = small_params(2, 1);
    std::vector<float> w{0.5F, 0.5F};
    StdpTraces tr(2, 1);
    const std::uint32_t pre[] = {0};
    const std::uint32_t post[] = {0};
    tr.advance(pre, {}, p);
    stdp_update(w, tr, pre, {}, p);
    tr.advance({}, post, p);
    stdp_update(w, tr, {}, post, p);
    EXPECT_GT(w[0], 0.5F);
    EXPECT_EQ(w[1], 0.5F);
}

TEST(Stdp, PostThenPreDepresses) {
    const auto p = small_params(1, 1);
    std::vector<float> w{0.5F};
    StdpTraces tr(1, 1);
    const std::uint32_t one[] = {0};
    tr.advance({}, one, p);
    stdp_update(w, tr, {}, one, p);
    tr.advance(one, {}, p);
    stdp_update(w, tr, one, {}, p);
    EXPECT_LT(w[0], 0.5F);
}

TEST(Stdp, ClippedAtWmax) {
    const auto p = small_params(1, 1);
    std::vector<float> w{p.w_max};
    StdpTraces tr(1, 1);
    const std::uint32_t one[] = {0};
    tr.advance(one, {}, p);
    tr.advance({}, one, p);
    stdp_update(w, tr, {}, one, p);
    EXPECT_EQ(w[0], p.w_max);
}

TEST(Training, WeightsStayBounded) {
    auto p = small_params(784, 10);
    auto model = SnnModel::initialize(p, 1);
    model.weights[5] = std::numeric_limits<float>::infinity();
    model.weights[17] = std::numeric_limits<float>::quiet_NaN();
    model.weights[40] = 3.0e30F;
    train_epoch(model, mnist_train().slice(0, 20), 4);
    for (float w : model.weights) {
        ASSERT_GE(w, 0.0F);
        ASSERT_LE(w, p.w_max);
    }
}

TEST(Training, NormalizeHitsColumnTarget) {
    auto p = small_params(50, 4);
    auto model = SnnModel::initialize(p, 2);
    model.normalize();
    for (std::size_t j = 0; j < 4; ++j) {
        double sum = 0;
        for (std::size_t i = 0; i < 50; ++i) sum += model.w(i, j);
        EXPECT_NEAR(sum, 0.1 * 50, 1e-4);
    }
}

TEST(Infer, DominantNeuronGivesPerfectScore) {
    auto p = small_params(4, 2);
    SnnModel m(p);
    for (std::size_t i = 0; i < 4; ++i) m.w(i, 1) = 1.0F;
    m.assignment = {0, 1};
    m.n_classes = 2;
    Dataset d;
    d.n_pixels = 4;
    d.pixels = {255, 255, 255, 255};
    d.labels = {1};
    EXPECT_DOUBLE_EQ(infer(m, d, 5), 1.0);
}

TEST(Infer, ZeroWeightsGiveChance) {
    const auto& d = mnist_test();
    auto p = small_params(784, 10);
    p.duration_ms = 50; // silent anyway
    SnnModel m(p);
    m.n_classes = 10;
    m.assignment.resize(10);
    std::iota(m.assignment.begin(), m.assignment.end(), 0);
    double sum = 0;
    const int seeds = 5;
    for (int s = 0; s < seeds; ++s) sum += infer(m, d, s);
    const double n = static_cast<double>(seeds * d.size());
    EXPECT_NEAR(sum / seeds, 0.1, 3 * std::sqrt(0.1 * 0.9 / n));
}

TEST(Infer, DeterministicAcrossJobCounts) {
    auto p = small_params(784, 20);
    auto m = SnnModel::initialize(p, 6);
    const auto data = mnist_train().slice(0, 60);
    train_epoch(m, data, 1);
    assign_labels(m, data, 2);
    const auto test = mnist_test().slice(0, 60);
    const double a = infer(m, test, 3, 1);
    EXPECT_EQ(a, infer(m, test, 3, 1));
    EXPECT_EQ(a, infer(m, test, 3, 3));
    auto m2 = SnnModel::initialize(p, 6);
    train_epoch(m2, data, 1);
    assign_labels(m2, data, 2, 4);
    EXPECT_EQ(m, m2);
}

TEST(Infer, Errors) {
    auto p = small_params(4, 2);
    SnnModel m(p);
    Dataset empty;
    empty.n_pixels = 4;
    m.assignment = {0, 0};
    m.n_classes = 1;
    EXPECT_THROW(infer(m, empty, 1), ParameterError);
    SnnModel unlabeled(p);
    Dataset one;
    one.n_pixels = 4;
    one.pixels = {0, 0, 0, 0};
    one.labels = {0};
    EXPECT_THROW(infer(unlabeled, one, 1), ParameterError);
}

TEST(Predict, TieBreakIsSeeded) {
    auto p = small_params(1, 4);
    SnnModel m(p);
    m.assignment = {0, 1, 2, 3};
    m.n_classes = 4;
    const std::vector<std::uint32_t> counts{2, 5, 5, 1};
    int seen1 = 0;
    for (std::uint64_t s = 0; s < 200; ++s) {
        const int c = predict(m, counts, s);
        ASSERT_TRUE(c == 1 || c == 2);
        seen1 += c == 1;
        EXPECT_EQ(c, predict(m, counts, s));
    }
    EXPECT_GT(seen1, 50);
    EXPECT_LT(seen1, 150);
}

TEST(ModelJson, RoundTripIsBitExact) {
    auto p = small_params(784, 10);
    auto m = SnnModel::initialize(p, 8);
    m.weights[3] = std::numeric_limits<float>::infinity();
    m.theta[2] = 0.15;
    m.assignment = {0, 1, 2, 3, 4, 5, 6, 7, 8, -1};
    m.n_classes = 10;
    std::stringstream ss;
    write_model_json(ss, m);
    const auto back = read_model_json(ss);
    EXPECT_EQ(back.params, m.params);
    EXPECT_EQ(back.assignment, m.assignment);
    EXPECT_EQ(back.theta, m.theta);
    ASSERT_EQ(back.weights.size(), m.weights.size());
    for (std::size_t i = 0; i < m.weights.size(); ++i)
        EXPECT_EQ(std::bit_cast<std::uint32_t>(back.weights[i]), std::bit_cast<std::uint32_t>(m.weights[i]));
}

TEST(DatasetTest, IdxSubsetShape) {
    const auto& d = mnist_test();
    EXPECT_EQ(d.size(), 1000u);
    EXPECT_EQ(d.n_pixels, 784u);
    EXPECT_EQ(d.n_classes(), 10u);
    const auto s = d.slice(990, 50);
    EXPECT_EQ(s.size(), 10u);
    EXPECT_EQ(s.label(0), d.label(990));
}

TEST(DatasetTest, CsvWithHeader) {
    axdram::testing::TempDir dir("csv");
    axdram::testing::write_file(dir / "d.csv", "label,p0,p1,p2\n3,0,128,255\n7,1,2,3\n");
    const auto d = load_csv(dir / "d.csv");
    EXPECT_EQ(d.size(), 2u);
    EXPECT_EQ(d.n_pixels, 3u);
    EXPECT_EQ(d.label(1), 7);
    EXPECT_EQ(d.image(0)[2], 255);
    axdram::testing::write_file(dir / "bad.csv", "3,0,999\n");
    EXPECT_THROW(load_csv(dir / "bad.csv"), IoError);
    EXPECT_THROW(load_csv(dir / "missing.csv"), IoError);
    EXPECT_THROW(load_idx(dir / "x", dir / "y"), IoError);
}
