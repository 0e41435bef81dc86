#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "axdram/dram.hpp"
#include "axdram/error_model.hpp"

namespace axdram {

/// FP32 weights as raw IEEE-754 words. Bit k of weight i is
/// (words[i] >> k) & 1, i.e. bit i*32 + k of the image.
struct WeightImage {
    std::vector<std::uint32_t> words;

    std::size_t count() const noexcept { return words.size(); }
    std::size_t bit_count() const noexcept { return words.size() * 32; }
    bool bit(std::size_t i) const { return (words.at(i / 32) >> (i % 32)) & 1U; }
    void flip(std::size_t i) { words.at(i / 32) ^= (1U << (i % 32)); }

    bool operator==(const WeightImage&) const = default;
};

WeightImage encode(std::span<const float> weights);
std::vector<float> decode(const WeightImage& image);

/// Replaces NaN with `lo` and clamps to [lo, hi].
void sanitize_weights(std::span<float> weights, float lo, float hi);

enum class MappingFlavor : std::uint8_t { Baseline, SafeSubarray };

std::string_view to_string(MappingFlavor flavor) noexcept;
std::optional<MappingFlavor> parse_flavor(std::string_view s) noexcept;

/// Weight word i lives at addresses()[i].
class MappingPlan {
  public:
    MappingPlan(const DramGeometry& geom, MappingFlavor flavor, std::vector<DramAddress> addresses,
                std::optional<double> ber_threshold = std::nullopt);

    const DramGeometry& geometry() const noexcept { return geom_; }
    MappingFlavor flavor() const noexcept { return flavor_; }
    std::optional<double> ber_threshold() const noexcept { return ber_threshold_; }
    const std::vector<DramAddress>& addresses() const noexcept { return addresses_; }
    std::size_t size() const noexcept { return addresses_.size(); }
    const DramAddress& operator[](std::size_t i) const { return addresses_[i]; }

    bool operator==(const MappingPlan&) const = default;

  private:
    DramGeometry geom_;
    MappingFlavor flavor_;
    std::vector<DramAddress> addresses_;
    std::optional<double> ber_threshold_;
};

/// Sequential fill of one bank (columns, then rows, then subarrays), moving
/// on to the next bank, chip, rank and channel once a bank is full.
MappingPlan plan_baseline(std::size_t n_weights, const DramGeometry& geom);

/// Safe-subarray mapping. Loop nest, outermost first: channel, rank, chip,
/// row, subarray, bank; every subarray whose rate is <= ber_threshold gets
/// one full row (all columns) per visit, unsafe subarrays get nothing.
MappingPlan plan_safe_subarray(std::size_t n_weights, const DramGeometry& geom,
                               const SubarrayRates& rates, double ber_threshold);

/// Words available to plan_safe_subarray.
std::uint64_t safe_capacity_words(const SubarrayRates& rates, double ber_threshold);

/// DRAM-resident copy of a weight vector.
struct StoredImage {
    std::vector<std::uint64_t> word_addresses; ///< linearized address of each weight
    WeightImage image;
};

StoredImage store(std::span<const float> weights, const MappingPlan& plan);
std::vector<float> load(const StoredImage& stored, const MappingPlan& plan);

/// Snapshot: 16-byte header ("SPXD", u16 version, u32 count, 6 reserved
/// bytes) followed by little-endian FP32 words.
inline constexpr std::uint16_t kSnapshotVersion = 1;
void write_weight_snapshot(std::ostream& os, std::span<const float> weights);
std::vector<float> read_weight_snapshot(std::istream& is);

/// CSV columns: weight_index,ch,ra,cp,ba,su,ro,co
void write_plan_csv(std::ostream& os, const MappingPlan& plan);
MappingPlan read_plan_csv(std::istream& is, const DramGeometry& geom, MappingFlavor flavor,
                          std::optional<double> ber_threshold = std::nullopt);

}  // namespace axdram
