#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>
#include <tuple>

#include "axdram/error_model.hpp"
#include "axdram/errors.hpp"
#include "axdram/weight_storage.hpp"

using namespace axdram;

namespace {

// one bank of 2^20 bits
DramGeometry mbit_bank() { return DramGeometry{1, 1, 1, 1, 16, 64, 32, 32}; }

}  // namespace

TEST(GenerateMap, ZeroRateIsEmptyForEveryModel) {
    for (auto k : {ErrorModelKind::M0, ErrorModelKind::M1, ErrorModelKind::M2, ErrorModelKind::M3}) {
        EXPECT_TRUE(generate_map(k, 0.0, mbit_bank(), 1).empty()) << to_string(k);
    }
}

TEST(GenerateMap, RejectsBadRate) {
    EXPECT_THROW(generate_map(ErrorModelKind::M0, -0.1, mbit_bank(), 1), ParameterError);
    EXPECT_THROW(generate_map(ErrorModelKind::M0, 1.5, mbit_bank(), 1), ParameterError);
    ErrorModelParams p;
    p.p_fault = 0.0;
    EXPECT_THROW(generate_map(ErrorModelKind::M0, 1e-3, mbit_bank(), 1, p), ParameterError);
}

TEST(GenerateMap, Deterministic) {
    for (auto k : {ErrorModelKind::M0, ErrorModelKind::M1, ErrorModelKind::M2, ErrorModelKind::M3}) {
        const auto a = generate_map(k, 1e-3, mbit_bank(), 42);
        const auto b = generate_map(k, 1e-3, mbit_bank(), 42);
        const auto c = generate_map(k, 1e-3, mbit_bank(), 43);
        EXPECT_EQ(a, b);
        EXPECT_FALSE(a == c);
    }
}

TEST(GenerateMap, M0FlipCountsFollowBinomial) {
    const auto g = mbit_bank();
    const double n = static_cast<double>(g.capacity_bits());
    for (double ber : {1e-4, 1e-3}) {
        const double mu = n * ber;
        const double sigma = std::sqrt(n * ber * (1 - ber));
        double total = 0.0;
        int outside = 0;
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            const auto map = generate_map(ErrorModelKind::M0, ber, g, seed);
            const double flips = static_cast<double>(realize_flips(map, seed).size());
            total += flips;
            outside += std::abs(flips - mu) > 3 * sigma;
        }
        // pooled count over 100 maps, and per-map 3 sigma excursions stay rare
        EXPECT_NEAR(total, 100 * mu, 3 * std::sqrt(100.0) * sigma) << ber;
        EXPECT_LE(outside, 2) << ber;
    }
}

TEST(GenerateMap, M0UniformAcrossSubarrays) {
    const auto g = mbit_bank();
    std::vector<double> counts(g.subarray_count(), 0.0);
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto map = generate_map(ErrorModelKind::M0, 1e-3, g, seed);
        for (const auto& c : map.cells()) counts[subarray_index(map.address_of(c), g)] += 1;
    }
    double total = 0;
    for (double c : counts) total += c;
    const double expected = total / counts.size();
    double chi2 = 0;
    for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
    EXPECT_LT(chi2, 30.578); // chi-square 15 dof, alpha 0.01
}

TEST(GenerateMap, M0SubarrayRateMean) {
    const auto g = mbit_bank();
    const double b = 1e-3;
    const auto rates = subarray_rates(generate_map(ErrorModelKind::M0, b, g, 9));
    double mean = 0;
    for (double r : rates.values()) mean += r;
    mean /= rates.size();
    const double sigma = std::sqrt(b * (1 - b) / static_cast<double>(g.capacity_bits()));
    EXPECT_NEAR(mean, b, 3 * sigma);
}

TEST(GenerateMap, M1ConfinedToFewBitlines) {
    const auto g = mbit_bank();
    const double ber = 1e-3;
    const std::uint64_t lines = std::uint64_t{g.n_su} * g.n_co * g.word_bits;
    const auto weak_lines = static_cast<std::size_t>(std::ceil(std::sqrt(ber) * lines));
    double flips = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto map = generate_map(ErrorModelKind::M1, ber, g, seed);
        std::set<std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>> bitlines;
        for (const auto& c : map.cells()) {
            const auto a = map.address_of(c);
            bitlines.insert({a.su, a.co, map.bit_of(c)});
        }
        EXPECT_LE(bitlines.size(), weak_lines);
        flips += static_cast<double>(realize_flips(map, seed).size());
    }
    const double mu = 20 * ber * g.capacity_bits();
    EXPECT_NEAR(flips, mu, 0.1 * mu);
}

TEST(GenerateMap, M2ConfinedToFewWordlines) {
    const auto g = mbit_bank();
    const double ber = 1e-3;
    const std::uint64_t lines = std::uint64_t{g.n_su} * g.n_ro;
    const auto weak_lines = static_cast<std::size_t>(std::ceil(std::sqrt(ber) * lines));
    double flips = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto map = generate_map(ErrorModelKind::M2, ber, g, seed);
        std::set<std::pair<std::uint32_t, std::uint32_t>> wordlines;
        for (const auto& c : map.cells()) {
            const auto a = map.address_of(c);
            wordlines.insert({a.su, a.ro});
        }
        EXPECT_LE(wordlines.size(), weak_lines);
        flips += static_cast<double>(realize_flips(map, seed).size());
    }
    const double mu = 50 * ber * g.capacity_bits();
    EXPECT_NEAR(flips, mu, 0.1 * mu);
}

TEST(GenerateMap, M3ExpectedRate) {
    const auto g = mbit_bank();
    ErrorModelParams p;
    p.p_one = 1.0;
    p.p_zero = 0.0;
    const auto map = generate_map(ErrorModelKind::M3, 1e-3, g, 4, p);
    // half of the stored bits are 1 on average, so 2*ber cells are weak
    const double n = static_cast<double>(g.capacity_bits());
    EXPECT_NEAR(static_cast<double>(map.size()), 2e-3 * n, 4 * std::sqrt(2e-3 * n));
    for (const auto& c : map.cells()) {
        EXPECT_EQ(c.p_one, 1.0);
        EXPECT_EQ(c.p_zero, 0.0);
    }
}

TEST(Inject, EmptyMapIsIdentity) {
    const DramGeometry g{1, 1, 1, 2, 2, 4, 8, 32};
    const auto plan = plan_baseline(20, g);
    std::vector<float> w(20);
    for (int i = 0; i < 20; ++i) w[i] = 0.05F * i;
    const auto img = encode(w);
    EXPECT_EQ(inject(img, generate_map(ErrorModelKind::M0, 0.0, g, 1), plan, 7), img);
}

TEST(Inject, CertainWeakCellSetsZeroBit) {
    const DramGeometry g{1, 1, 1, 2, 2, 4, 8, 32};
    const auto plan = plan_baseline(16, g);
    const std::vector<float> w(16, 0.0F);
    const WeakCellMap map(g, ErrorModelKind::M0, 0, {WeakCell{cell_bit_index(plan[5], 30, g), 1.0, 1.0}});
    const auto out = inject(encode(w), map, plan, 3);
    for (std::size_t i = 0; i < 16; ++i) EXPECT_EQ(out.words[i], i == 5 ? 0x40000000U : 0U);
}

TEST(Inject, M3FlipsOnlyStoredOnes) {
    const DramGeometry g{1, 1, 1, 1, 2, 4, 16, 32};
    const auto plan = plan_baseline(g.capacity_words(), g);
    ErrorModelParams p;
    p.p_one = 1.0;
    p.p_zero = 0.0;
    const auto map = generate_map(ErrorModelKind::M3, 0.05, g, 12, p);
    ASSERT_FALSE(map.empty());
    std::vector<std::uint32_t> raw(plan.size());
    for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = static_cast<std::uint32_t>(0x9E3779B9U * (i + 1));
    const WeightImage img{raw};
    const auto out = inject(img, map, plan, 5);
    for (std::size_t i = 0; i < raw.size(); ++i) {
        for (std::uint32_t bit = 0; bit < 32; ++bit) {
            const bool weak = map.find(cell_bit_index(plan[i], bit, g)) != nullptr;
            const bool was = (raw[i] >> bit) & 1U;
            const bool now = (out.words[i] >> bit) & 1U;
            EXPECT_EQ(now, weak ? false : was);
        }
    }
}

TEST(Inject, DeterministicAndChecked) {
    const DramGeometry g{1, 1, 1, 2, 2, 4, 8, 32};
    const auto plan = plan_baseline(64, g);
    std::vector<float> w(64, 0.5F);
    ErrorModelParams p;
    p.p_fault = 0.5;
    const auto map = generate_map(ErrorModelKind::M0, 0.01, g, 2, p);
    EXPECT_EQ(inject(encode(w), map, plan, 9), inject(encode(w), map, plan, 9));
    std::vector<float> short_w(10, 0.5F);
    EXPECT_THROW(inject(encode(short_w), map, plan, 9), ConsistencyError);
}

TEST(SubarrayRatesTest, EmptyAndSingleCell) {
    const DramGeometry g{1, 1, 1, 2, 4, 4, 8, 32}; // 1024 bits per subarray
    ASSERT_EQ(g.bits_per_subarray(), 1024u);
    const auto empty = subarray_rates(generate_map(ErrorModelKind::M0, 0.0, g, 1));
    for (double r : empty.values()) EXPECT_EQ(r, 0.0);

    const DramAddress a{0, 0, 0, 1, 2, 3, 4};
    const WeakCellMap one(g, ErrorModelKind::M0, 0, {WeakCell{cell_bit_index(a, 7, g), 1.0, 1.0}});
    const auto rates = subarray_rates(one);
    for (std::size_t s = 0; s < rates.size(); ++s) {
        EXPECT_EQ(rates.rate(s), s == subarray_index(a, g) ? 1.0 / 1024 : 0.0);
    }
}

TEST(WeakCellMapTest, RejectsDuplicatesAndOutOfRange) {
    const DramGeometry g{1, 1, 1, 1, 1, 2, 2, 32};
    EXPECT_THROW(WeakCellMap(g, ErrorModelKind::M0, 0, {WeakCell{3, 1, 1}, WeakCell{3, 1, 1}}), ParameterError);
    EXPECT_THROW(WeakCellMap(g, ErrorModelKind::M0, 0, {WeakCell{128, 1, 1}}), AddressError);
    EXPECT_THROW(WeakCellMap(g, ErrorModelKind::M0, 0, {WeakCell{1, 2.0, 2.0}}), ParameterError);
}

TEST(WeakCellMapTest, JsonlRoundTrip) {
    const DramGeometry g{1, 1, 1, 2, 2, 8, 8, 32};
    ErrorModelParams p;
    p.p_fault = 0.25;
    const auto map = generate_map(ErrorModelKind::M0, 0.01, g, 6, p);
    std::stringstream ss;
    write_map_jsonl(ss, map);
    const auto back = read_map_jsonl(ss, g, ErrorModelKind::M0, 6);
    EXPECT_EQ(back, map);

    ErrorModelParams p3;
    p3.p_one = 0.75;
    p3.p_zero = 0.25;
    const auto m3 = generate_map(ErrorModelKind::M3, 0.01, g, 6, p3);
    std::stringstream s3;
    write_map_jsonl(s3, m3);
    EXPECT_NE(s3.str().find("\"p1\":0.75"), std::string::npos);
    EXPECT_EQ(read_map_jsonl(s3, g, ErrorModelKind::M0, 6), m3);
}

TEST(WeakCellMapTest, JsonlGarbage) {
    const DramGeometry g{1, 1, 1, 1, 1, 2, 2, 32};
    std::stringstream ss("{\"ch\":0}\n");
    EXPECT_THROW(read_map_jsonl(ss, g), IoError);
}
