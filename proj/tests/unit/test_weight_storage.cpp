#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "axdram/energy.hpp"
#include "axdram/error_model.hpp"
#include "axdram/errors.hpp"
#include "axdram/weight_storage.hpp"
#include "test_support.hpp"

using namespace axdram;
using axdram::testing::golden_dir;
using axdram::testing::read_file;

namespace {

DramGeometry tiny() { return DramGeometry{1, 1, 1, 2, 2, 2, 2, 32}; }

std::string plan_csv(const MappingPlan& p) {
    std::ostringstream os;
    write_plan_csv(os, p);
    return os.str();
}

}  // namespace

TEST(Codec, ZeroIsAllZeroBits) {
    const float z = 0.0F;
    const auto img = encode(std::span<const float>(&z, 1));
    EXPECT_EQ(img.words[0], 0u);
    for (std::size_t b = 0; b < 32; ++b) EXPECT_FALSE(img.bit(b));
}

TEST(Codec, ExponentMsbFlipGivesInfinity) {
    const float one = 1.0F;
    auto img = encode(std::span<const float>(&one, 1));
    EXPECT_EQ(img.words[0], 0x3F800000u);
    img.flip(30);
    EXPECT_EQ(img.words[0], 0x7F800000u);
    EXPECT_EQ(decode(img)[0], std::numeric_limits<float>::infinity());
}

TEST(Codec, MantissaLsbFlip) {
    const float one = 1.0F;
    auto img = encode(std::span<const float>(&one, 1));
    img.flip(0);
    EXPECT_EQ(decode(img)[0], 1.0F + std::ldexp(1.0F, -23));
}

TEST(Codec, RoundTripExact) {
    std::mt19937 rng(1);
    std::normal_distribution<float> d(0.0F, 10.0F);
    std::vector<float> w(1000);
    for (auto& x : w) x = d(rng);
    w.push_back(-0.0F);
    w.push_back(std::numeric_limits<float>::denorm_min());
    const auto back = decode(encode(w));
    for (std::size_t i = 0; i < w.size(); ++i) EXPECT_EQ(std::bit_cast<std::uint32_t>(back[i]), std::bit_cast<std::uint32_t>(w[i]));
}

TEST(Codec, SanitizeClampsAndDropsNan) {
    std::vector<float> w{std::numeric_limits<float>::quiet_NaN(), 5.0F, -1.0F, 0.5F,
                         std::numeric_limits<float>::infinity()};
    sanitize_weights(w, 0.0F, 1.0F);
    EXPECT_EQ(w, (std::vector<float>{0.0F, 1.0F, 0.0F, 0.5F, 1.0F}));
}

TEST(Baseline, OneRowWhenNEqualsColumns) {
    const DramGeometry g{1, 1, 1, 4, 4, 8, 16, 32};
    const auto p = plan_baseline(16, g);
    for (std::size_t i = 0; i < 16; ++i) {
        EXPECT_EQ(p[i], (DramAddress{0, 0, 0, 0, 0, 0, static_cast<std::uint32_t>(i)}));
    }
}

TEST(Baseline, SpillsIntoNextBank) {
    const DramGeometry g{1, 1, 1, 4, 4, 8, 16, 32};
    const std::size_t n = 16 * 8 * 4 + 1;
    const auto p = plan_baseline(n, g);
    EXPECT_EQ(p[n - 2].ba, 0u);
    EXPECT_EQ(p[n - 1], (DramAddress{0, 0, 0, 1, 0, 0, 0}));
}

TEST(Baseline, MatchesGolden) {
    EXPECT_EQ(plan_csv(plan_baseline(12, tiny())), read_file(golden_dir() / "plan_baseline_tiny.csv"));
}

TEST(Baseline, CapacityError) {
    EXPECT_THROW(plan_baseline(17, tiny()), CapacityError);
    EXPECT_NO_THROW(plan_baseline(16, tiny()));
}

TEST(Baseline, InjectiveExhaustive) {
    const DramGeometry g{2, 1, 2, 2, 2, 2, 2, 32};
    EXPECT_NO_THROW(plan_baseline(g.capacity_words(), g));
    std::vector<DramAddress> dup{DramAddress{}, DramAddress{}};
    EXPECT_THROW(MappingPlan(g, MappingFlavor::Baseline, dup), ConsistencyError);
}

TEST(SafeSubarray, AllSafeTwoBanks) {
    const DramGeometry g{1, 1, 1, 2, 2, 4, 8, 32};
    const auto p = plan_safe_subarray(16, g, SubarrayRates::uniform(g, 0.0), 0.0);
    for (std::uint32_t i = 0; i < 16; ++i) {
        EXPECT_EQ(p[i], (DramAddress{0, 0, 0, i / 8, 0, 0, i % 8}));
    }
    EXPECT_EQ(p.flavor(), MappingFlavor::SafeSubarray);
    EXPECT_EQ(p.ber_threshold(), 0.0);
}

TEST(SafeSubarray, UnsafeSubarrayGoldenOrder) {
    const auto g = tiny();
    std::vector<double> rates(g.subarray_count(), 0.0);
    rates[subarray_index(DramAddress{0, 0, 0, 1, 0, 0, 0}, g)] = 1e-3;
    const SubarrayRates r(g, rates);
    const auto p = plan_safe_subarray(12, g, r, 1e-4);
    EXPECT_EQ(plan_csv(p), read_file(golden_dir() / "plan_safe_subarray_tiny.csv"));
}

TEST(SafeSubarray, AllUnsafeIsCapacityError) {
    const auto g = tiny();
    const auto r = SubarrayRates::uniform(g, 1e-3);
    try {
        plan_safe_subarray(4, g, r, 1e-4);
        FAIL() << "expected CapacityError";
    } catch (const CapacityError& e) {
        EXPECT_NE(std::string(e.what()).find("shortfall 4"), std::string::npos) << e.what();
    }
}

TEST(SafeSubarray, GeometryMismatch) {
    const auto r = SubarrayRates::uniform(DramGeometry{1, 1, 1, 4, 2, 2, 2, 32}, 0.0);
    EXPECT_THROW(plan_safe_subarray(4, tiny(), r, 0.0), ConsistencyError);
}

TEST(SafeSubarray, RandomPlansStayInSafeSubarrays) {
    std::mt19937_64 rng(77);
    for (int round = 0; round < 100; ++round) {
        const DramGeometry g{1, 1 + static_cast<std::uint32_t>(rng() % 2), 1, 1 + static_cast<std::uint32_t>(rng() % 4),
                             1 + static_cast<std::uint32_t>(rng() % 4), 1 + static_cast<std::uint32_t>(rng() % 8),
                             1 + static_cast<std::uint32_t>(rng() % 8), 32};
        std::vector<double> rates(g.subarray_count());
        for (auto& x : rates) x = (rng() % 3 == 0) ? 1e-3 : 1e-6;
        const SubarrayRates r(g, rates);
        const auto cap = safe_capacity_words(r, 1e-5);
        if (cap == 0) continue;
        const auto p = plan_safe_subarray(1 + rng() % cap, g, r, 1e-5);
        for (const auto& a : p.addresses()) EXPECT_LE(r.rate_at(a), 1e-5);
    }
}

TEST(SafeSubarray, LocalityNotWorseThanBaseline) {
    const DramGeometry g{1, 1, 1, 8, 16, 64, 128, 32};
    const std::size_t n = 784 * 100;
    const CycleTiming t = nominal_cycle_timing();
    const auto base = trace_inference(plan_baseline(n, g), t);
    const auto safe = trace_inference(plan_safe_subarray(n, g, SubarrayRates::uniform(g, 0.0), 0.0), t);
    EXPECT_GE(safe.counts().hits, base.counts().hits);
}

TEST(StoreLoad, RoundTrip) {
    const DramGeometry g{1, 1, 1, 4, 4, 8, 64, 32};
    std::mt19937 rng(3);
    std::uniform_real_distribution<float> d(0.0F, 1.0F);
    std::vector<float> w(1000);
    for (auto& x : w) x = d(rng);
    const auto plan = plan_baseline(w.size(), g);
    EXPECT_EQ(load(store(w, plan), plan), w);
    EXPECT_THROW(store(std::span<const float>(w.data(), 10), plan), ConsistencyError);
}

TEST(StoreLoad, OneFlipChangesOneWeight) {
    const DramGeometry g{1, 1, 1, 2, 2, 8, 16, 32};
    std::vector<float> w(100, 0.25F);
    const auto plan = plan_baseline(w.size(), g);
    auto stored = store(w, plan);
    const WeakCellMap map(g, ErrorModelKind::M0, 0, {WeakCell{cell_bit_index(plan[37], 22, g), 1.0, 1.0}});
    stored.image = inject(stored.image, map, plan, 1);
    const auto back = load(stored, plan);
    int changed = 0;
    for (std::size_t i = 0; i < w.size(); ++i) changed += back[i] != w[i];
    EXPECT_EQ(changed, 1);
    EXPECT_NE(back[37], 0.25F);
}

TEST(StoreLoad, LoadDetectsPlanMismatch) {
    const DramGeometry g{1, 1, 1, 2, 2, 8, 16, 32};
    std::vector<float> w(40, 0.5F);
    const auto stored = store(w, plan_baseline(w.size(), g));
    const auto other = plan_safe_subarray(w.size(), g, SubarrayRates::uniform(g, 0.0), 0.0);
    EXPECT_THROW(load(stored, other), ConsistencyError);
}

TEST(StoreLoad, FlipsInUnsafeSubarraysDoNotReachSafePlan) {
    const DramGeometry g{1, 1, 1, 4, 4, 8, 16, 32};
    const auto map = generate_map(ErrorModelKind::M0, 1e-4, g, 5);
    ASSERT_FALSE(map.empty());
    const auto rates = subarray_rates(map);
    // threshold below every nonzero rate: only untouched subarrays count as safe
    const double th = 0.0;
    const auto cap = safe_capacity_words(rates, th);
    ASSERT_GT(cap, 0u);
    ASSERT_LT(cap, g.capacity_words());
    std::vector<float> w(cap, 0.5F);
    const auto plan = plan_safe_subarray(w.size(), g, rates, th);
    auto stored = store(w, plan);
    stored.image = inject(stored.image, map, plan, 8);
    EXPECT_EQ(load(stored, plan), w);
}

TEST(Snapshot, HeaderLayoutAndRoundTrip) {
    std::vector<float> w{1.0F, -2.5F, 0.0F};
    std::stringstream ss;
    write_weight_snapshot(ss, w);
    const std::string bytes = ss.str();
    ASSERT_EQ(bytes.size(), 16u + 12u);
    EXPECT_EQ(bytes.substr(0, 4), "SPXD");
    EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 1);
    EXPECT_EQ(static_cast<unsigned char>(bytes[6]), 3);
    // 1.0f little-endian
    EXPECT_EQ(static_cast<unsigned char>(bytes[16 + 3]), 0x3F);
    EXPECT_EQ(static_cast<unsigned char>(bytes[16 + 2]), 0x80);
    EXPECT_EQ(read_weight_snapshot(ss), w);
}

TEST(Snapshot, RejectsBadMagicAndTruncation) {
    std::stringstream bad("XXXX000000000000");
    EXPECT_THROW(read_weight_snapshot(bad), IoError);
    std::vector<float> w{1.0F, 2.0F};
    std::stringstream ss;
    write_weight_snapshot(ss, w);
    std::stringstream cut(ss.str().substr(0, 20));
    EXPECT_THROW(read_weight_snapshot(cut), IoError);
}

TEST(PlanCsv, RoundTrip) {
    const auto g = tiny();
    const auto p = plan_baseline(12, g);
    std::stringstream ss(plan_csv(p));
    EXPECT_EQ(read_plan_csv(ss, g, MappingFlavor::Baseline), p);
    std::stringstream gap("weight_index,ch,ra,cp,ba,su,ro,co\n1,0,0,0,0,0,0,0\n");
    EXPECT_THROW(read_plan_csv(gap, g, MappingFlavor::Baseline), IoError);
}

TEST(Flavor, Names) {
    EXPECT_EQ(to_string(MappingFlavor::SafeSubarray), "safe-subarray");
    EXPECT_EQ(parse_flavor("baseline"), MappingFlavor::Baseline);
    EXPECT_FALSE(parse_flavor("nope"));
}
