#include <gtest/gtest.h>

#include "axdram/config.hpp"
#include "axdram/errors.hpp"
#include "test_support.hpp"

using namespace axdram;
using axdram::testing::source_dir;

namespace {

std::string with_dataset(const std::string& extra) {
    const std::string d = (source_dir() / "data" / "mnist").generic_string();
    return R"({"dataset": {"train_images": ")" + d + R"(/train-images-idx3-ubyte", "train_labels": ")" + d +
           R"(/train-labels-idx1-ubyte", "test_images": ")" + d + R"(/t10k-images-idx3-ubyte", "test_labels": ")" + d +
           R"(/t10k-labels-idx1-ubyte", "train_limit": 10, "test_limit": 5})" + extra + "}";
}

std::vector<std::string> violations_of(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ValidationError& e) {
        return e.violations();
    }
    return {};
}

bool mentions(const std::vector<std::string>& v, const std::string& needle) {
    for (const auto& s : v)
        if (s.find(needle) != std::string::npos) return true;
    return false;
}

}  // namespace

TEST(Config, MinimalIsValid) {
    const auto c = parse_config(with_dataset(""));
    EXPECT_TRUE(c.violations().empty());
    EXPECT_EQ(c.voltages.size(), 5u);
    EXPECT_EQ(c.schedule.rates, (std::vector<double>{1e-6, 1e-5, 1e-4, 1e-3}));
    EXPECT_EQ(c.network_sizes, (std::vector<std::size_t>{100}));
}

TEST(Config, VoltageBelowRangeRejected) {
    const auto v = violations_of(with_dataset(R"(, "voltages": [1.1, 0.9])"));
    ASSERT_FALSE(v.empty());
    EXPECT_TRUE(mentions(v, "0.9"));
    EXPECT_THROW(parse_config(with_dataset(R"(, "voltages": [0.9])")), ValidationError);
}

TEST(Config, EveryViolationIsListed) {
    const auto v = violations_of(with_dataset(
        R"(, "voltages": [0.9], "bogus": 1, "seed": "x", "geometry": {"n_ba": 0}, "training": {"n_epoch": -1},
           "schedule": {"rates": [1e-4, 1e-5]}, "snn": {"v_reset": -40})"));
    EXPECT_TRUE(mentions(v, "bogus"));
    EXPECT_TRUE(mentions(v, "seed"));
    EXPECT_TRUE(mentions(v, "0.9"));
    EXPECT_TRUE(mentions(v, "n_ba"));
    EXPECT_TRUE(mentions(v, "n_epoch"));
    EXPECT_TRUE(mentions(v, "schedule"));
    EXPECT_TRUE(mentions(v, "v_reset"));
    EXPECT_GE(v.size(), 7u);
    try {
        parse_config(with_dataset(R"(, "voltages": [0.9], "bogus": 1)"));
    } catch (const ValidationError& e) {
        const std::string what = e.what();
        EXPECT_NE(what.find("bogus"), std::string::npos);
        EXPECT_NE(what.find("0.9"), std::string::npos);
    }
}

TEST(Config, CapacityChecked) {
    const auto v = violations_of(with_dataset(
        R"(, "geometry": {"n_ba": 1, "n_su": 1, "n_ro": 1, "n_co": 64}, "network_sizes": [100])"));
    EXPECT_TRUE(mentions(v, "N100"));
}

TEST(Config, NotJson) {
    EXPECT_THROW(parse_config("{nope"), ValidationError);
}

TEST(Config, GeometricSchedule) {
    const auto c = parse_config(with_dataset(R"(, "schedule": {"first": 1e-7, "count": 3, "factor": 10})"));
    EXPECT_EQ(c.schedule.rates, (std::vector<double>{1e-7, 1e-6, 1e-5}));
}

TEST(Config, CanonicalJsonRoundTrip) {
    const auto c = parse_config(with_dataset(R"(, "seed": 99, "voltages": [1.1], "error_model": {"kind": "M2"})"));
    const auto again = parse_config(to_json(c));
    EXPECT_EQ(to_json(again), to_json(c));
    EXPECT_EQ(again.seed, 99u);
    EXPECT_EQ(again.error_model, ErrorModelKind::M2);
}

TEST(Config, HashIgnoresOutputDirOnly) {
    auto a = parse_config(with_dataset(""));
    auto b = a;
    b.output_dir = "elsewhere";
    EXPECT_EQ(config_hash(a), config_hash(b));
    EXPECT_EQ(config_hash(a).size(), 16u);
    b.seed = 2;
    EXPECT_NE(config_hash(a), config_hash(b));
}

TEST(Config, MissingDatasetIsIoError) {
    const auto c = parse_config(R"({"dataset": {"train_images": "/nonexistent/a", "train_labels": "/nonexistent/b",
                                    "test_images": "/nonexistent/c", "test_labels": "/nonexistent/d"}})");
    EXPECT_THROW(load_datasets(c), IoError);
}

TEST(Config, DatasetsHonourLimits) {
    const auto [train, test] = load_datasets(parse_config(with_dataset("")));
    EXPECT_EQ(train.size(), 10u);
    EXPECT_EQ(test.size(), 5u);
}

TEST(Config, PixelCountMustMatch) {
    const auto c = parse_config(with_dataset(R"(, "snn": {"n_in": 100}, "network_sizes": [1])"));
    EXPECT_THROW(load_datasets(c), IoError);
}

TEST(Config, ShippedConfigsLoad) {
    for (const char* name : {"default.json", "micro.json"}) {
        const auto c = load_config(source_dir() / "configs" / name);
        EXPECT_TRUE(c.violations().empty()) << name;
        EXPECT_NO_THROW(load_datasets(c)) << name;
    }
    EXPECT_THROW(load_config(source_dir() / "configs" / "missing.json"), IoError);
}
