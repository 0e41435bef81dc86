#include <gtest/gtest.h>

#include <cstdio>
#include <numeric>

#include "hardening_fixture.hpp"

using namespace axdram;
using axdram::testing::HardenedRun;
using axdram::testing::HardeningSetup;

namespace {

constexpr std::size_t kSeeds = 5;
constexpr double kSlack = 0.5; // pp

const HardeningSetup& setup() {
    static const HardeningSetup s;
    return s;
}

const std::vector<HardenedRun>& runs() {
    static const std::vector<HardenedRun> r = [] {
        std::vector<HardenedRun> out;
        for (std::uint64_t s = 1; s <= kSeeds; ++s) out.push_back(setup().run(s));
        return out;
    }();
    return r;
}

std::vector<double> rates_with_zero() {
    std::vector<double> r{0.0};
    for (double x : setup().config.schedule.rates) r.push_back(x);
    return r;
}

// Mean over seeds of each run's own tolerance curve, one fresh map per run.
std::vector<double> mean_curve(bool hardened) {
    const auto rates = rates_with_zero();
    std::vector<double> sum(rates.size(), 0.0);
    for (const auto& run : runs()) {
        // no threshold means nothing was hardened; the deployed model stays model_0
        const SnnModel& m = hardened && run.result.model_1 ? *run.result.model_1 : run.model_0;
        const auto seeds = setup().fresh_seeds(run.seed, 1);
        const auto c = tolerance_curve(m, rates, setup().dram(), setup().test, seeds, setup().eval_seed(run.seed));
        for (std::size_t i = 0; i < rates.size(); ++i) sum[i] += c.mean[i];
    }
    for (double& x : sum) x /= static_cast<double>(runs().size());
    return sum;
}

}  // namespace

TEST(Experiments, BaselineLearnsDigits) {
    for (const auto& r : runs()) {
        EXPECT_GT(r.acc0, 60.0) << "seed " << r.seed;
    }
}

TEST(Experiments, UnhardenedAccuracyFallsWithErrorRate) {
    const auto c = mean_curve(false);
    for (std::size_t i = 1; i < c.size(); ++i) {
        EXPECT_LE(c[i], c[i - 1] + kSlack) << "rate index " << i;
    }
    EXPECT_LT(c.back(), c.front() - 10.0);
}

TEST(Experiments, ErrorFreeStorageIsLossless) {
    for (const auto& r : runs()) {
        const std::vector<double> zero{0.0};
        const auto seeds = setup().fresh_seeds(r.seed, 2);
        const auto c0 = tolerance_curve(r.model_0, zero, setup().dram(), setup().test, seeds, setup().eval_seed(r.seed));
        EXPECT_EQ(c0.mean[0], r.acc0);
        ASSERT_EQ(r.result.model_1.has_value(), r.result.ber_th.has_value());
        if (!r.result.model_1) continue;
        ASSERT_TRUE(r.result.acc_model1.has_value());
        const auto c1 =
            tolerance_curve(*r.result.model_1, zero, setup().dram(), setup().test, seeds, setup().eval_seed(r.seed));
        EXPECT_EQ(c1.mean[0], *r.result.acc_model1);
    }
}

TEST(Experiments, HardeningKeepsAccuracyAtTrainingTime) {
    for (const auto& r : runs()) {
        ASSERT_EQ(r.result.improved_curve.size(), r.result.rates.size());
        for (std::size_t i = 0; i < r.result.rates.size(); ++i) {
            if (r.result.ber_th && r.result.rates[i] <= *r.result.ber_th) {
                EXPECT_GE(r.result.improved_curve[i], r.acc0 - setup().config.training.acc_bound)
                    << "seed " << r.seed << " rate " << r.result.rates[i];
            }
        }
    }
}

TEST(Experiments, HardenedModelDominatesOnFreshMaps) {
    const auto base = mean_curve(false);
    const auto hard = mean_curve(true);
    const auto rates = rates_with_zero();
    for (std::size_t i = 0; i < rates.size(); ++i) {
        std::printf("rate %g: hardened %.2f baseline %.2f\n", rates[i], hard[i], base[i]);
    }
    for (std::size_t i = 0; i < rates.size(); ++i) {
        EXPECT_GE(hard[i], base[i] - kSlack) << "rate " << rates[i] << ": hardened " << hard[i] << " vs baseline "
                                             << base[i];
    }
}
