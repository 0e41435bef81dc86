#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include "axdram/dram.hpp"

namespace axdram {

class MappingPlan;
struct WeightImage;

/// Probabilistic models of voltage-induced bit errors.
///  M0: weak cells uniformly scattered over a bank.
///  M1: weak cells confined to a random subset of bitlines.
///  M2: weak cells confined to a random subset of wordlines.
///  M3: like M0, but the flip probability depends on the stored bit.
enum class ErrorModelKind : std::uint8_t { M0, M1, M2, M3 };

std::string_view to_string(ErrorModelKind kind) noexcept;
std::optional<ErrorModelKind> parse_error_model(std::string_view s) noexcept;

struct ErrorModelParams {
    double p_fault = 1.0; ///< M0-M2: flip probability of a weak cell
    double p_one = 1.0;   ///< M3: flip probability of a weak cell holding 1
    double p_zero = 0.0;  ///< M3: flip probability of a weak cell holding 0
};

struct WeakCell {
    std::uint64_t bit_index = 0; ///< linearize(addr) * word_bits + bit
    double p_one = 0.0;
    double p_zero = 0.0;

    /// Expected flip probability for an unbiased stored bit.
    double p() const noexcept { return 0.5 * (p_one + p_zero); }
    double p_for(bool stored) const noexcept { return stored ? p_one : p_zero; }

    bool operator==(const WeakCell&) const = default;
};

std::uint64_t cell_bit_index(const DramAddress& addr, std::uint32_t bit, const DramGeometry& geom);

class WeakCellMap {
  public:
    WeakCellMap(const DramGeometry& geom, ErrorModelKind kind, std::uint64_t seed,
                std::vector<WeakCell> cells);

    const DramGeometry& geometry() const noexcept { return geom_; }
    ErrorModelKind kind() const noexcept { return kind_; }
    std::uint64_t seed() const noexcept { return seed_; }
    const std::vector<WeakCell>& cells() const noexcept { return cells_; }
    std::size_t size() const noexcept { return cells_.size(); }
    bool empty() const noexcept { return cells_.empty(); }

    const WeakCell* find(std::uint64_t bit_index) const noexcept;
    DramAddress address_of(const WeakCell& cell) const;
    std::uint32_t bit_of(const WeakCell& cell) const noexcept;

    /// Cells whose word index lies in [first_word, last_word).
    std::pair<std::size_t, std::size_t> word_range(std::uint64_t first_word,
                                                   std::uint64_t last_word) const noexcept;

    bool operator==(const WeakCellMap&) const = default;

  private:
    DramGeometry geom_;
    ErrorModelKind kind_;
    std::uint64_t seed_;
    std::vector<WeakCell> cells_; // sorted by bit_index, unique
};

/// Draws a weak-cell map whose expected aggregate flip rate is `target_ber`.
WeakCellMap generate_map(ErrorModelKind kind, double target_ber, const DramGeometry& geom,
                         std::uint64_t seed, const ErrorModelParams& params = {});

/// Flips every stored bit that sits on a weak cell, with that cell's
/// probability. The per-cell draw is a pure function of (seed, cell), so the
/// result does not depend on iteration order.
WeightImage inject(const WeightImage& bits, const WeakCellMap& map, const MappingPlan& plan,
                   std::uint64_t seed);

/// Cells that flip under `seed`, as ascending bit indices, assuming every
/// cell holds a 0 (so M3 cells use p_zero). Uses the same draws as `inject`.
std::vector<std::uint64_t> realize_flips(const WeakCellMap& map, std::uint64_t seed);

/// Expected flips per stored bit of every (ch, ra, cp, ba, su) subarray.
class SubarrayRates {
  public:
    SubarrayRates(const DramGeometry& geom, std::vector<double> rates);

    const DramGeometry& geometry() const noexcept { return geom_; }
    double rate(std::uint64_t flat_subarray) const { return rates_.at(flat_subarray); }
    double rate_at(const DramAddress& addr) const { return rate(subarray_index(addr, geom_)); }
    const std::vector<double>& values() const noexcept { return rates_; }
    std::size_t size() const noexcept { return rates_.size(); }

    /// Every subarray at `rate`.
    static SubarrayRates uniform(const DramGeometry& geom, double rate);

  private:
    DramGeometry geom_;
    std::vector<double> rates_;
};

SubarrayRates subarray_rates(const WeakCellMap& map);

/// JSON lines, one object per weak cell: {ch,ra,cp,ba,su,ro,co,bit,p}.
/// M3 cells also carry p1 and p0.
void write_map_jsonl(std::ostream& os, const WeakCellMap& map);
WeakCellMap read_map_jsonl(std::istream& is, const DramGeometry& geom,
                           ErrorModelKind kind = ErrorModelKind::M0, std::uint64_t seed = 0);

}  // namespace axdram
