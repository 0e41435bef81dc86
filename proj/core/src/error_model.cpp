#include "axdram/error_model.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <string>
#include <unordered_set>

#include <json.hpp>

#include "axdram/errors.hpp"
#include "axdram/seeding.hpp"
#include "axdram/weight_storage.hpp"
#include "text_util.hpp"

namespace axdram {

namespace {

class UniformSource {
  public:
    explicit UniformSource(std::uint64_t seed) : engine_(seed) {}
    double next() { return to_unit(engine_()); }
    std::uint64_t below(std::uint64_t n) {
        return std::min<std::uint64_t>(static_cast<std::uint64_t>(next() * static_cast<double>(n)),
                                       n - 1);
    }

  private:
    std::mt19937_64 engine_;
};

// Calls emit(k) for each k in [0, n) independently with probability p,
// in ascending order, by drawing geometric gaps.
template <class Emit>
void bernoulli_positions(std::uint64_t n, double p, UniformSource& rng, Emit&& emit) {
    if (n == 0 || p <= 0.0) return;
    if (p >= 1.0) {
        for (std::uint64_t k = 0; k < n; ++k) emit(k);
        return;
    }
    const double log_q = std::log1p(-p);
    std::uint64_t pos = 0;
    while (pos < n) {
        const double gap = std::floor(std::log1p(-rng.next()) / log_q);
        if (gap >= static_cast<double>(n - pos)) break;
        pos += static_cast<std::uint64_t>(gap);
        emit(pos);
        ++pos;
    }
}

// Floyd's algorithm: `count` distinct values from [0, n), ascending.
std::vector<std::uint64_t> choose_distinct(std::uint64_t n, std::uint64_t count,
                                           UniformSource& rng) {
    std::unordered_set<std::uint64_t> chosen;
    chosen.reserve(count * 2);
    for (std::uint64_t j = n - count; j < n; ++j) {
        const std::uint64_t t = rng.below(j + 1);
        if (!chosen.insert(t).second) chosen.insert(j);
    }
    std::vector<std::uint64_t> out(chosen.begin(), chosen.end());
    std::sort(out.begin(), out.end());
    return out;
}

DramAddress bank_origin(std::uint64_t bank, const DramGeometry& g) {
    DramAddress a;
    a.ba = static_cast<std::uint32_t>(bank % g.n_ba);
    bank /= g.n_ba;
    a.cp = static_cast<std::uint32_t>(bank % g.n_cp);
    bank /= g.n_cp;
    a.ra = static_cast<std::uint32_t>(bank % g.n_ra);
    a.ch = static_cast<std::uint32_t>(bank / g.n_ra);
    return a;
}

// Weak lines and in-line weak probability for the line-confined models:
// ceil(sqrt(ber) * lines) lines, each cell on them weak with probability
// ber * lines / (weak_lines * p_fault), which preserves the aggregate rate.
std::pair<std::uint64_t, double> line_split(double ber, std::uint64_t lines, double p_fault) {
    const auto weak_lines = std::min<std::uint64_t>(
        lines, static_cast<std::uint64_t>(std::ceil(std::sqrt(ber) * static_cast<double>(lines))));
    const double q = ber * static_cast<double>(lines) / (static_cast<double>(weak_lines) * p_fault);
    if (q > 1.0 + 1e-12) throw ParameterError("error model: p_fault too small for target_ber");
    return {weak_lines, std::min(q, 1.0)};
}

}  // namespace

std::string_view to_string(ErrorModelKind kind) noexcept {
    switch (kind) {
        case ErrorModelKind::M0: return "M0";
        case ErrorModelKind::M1: return "M1";
        case ErrorModelKind::M2: return "M2";
        case ErrorModelKind::M3: return "M3";
    }
    return "?";
}

std::optional<ErrorModelKind> parse_error_model(std::string_view s) noexcept {
    if (s == "M0" || s == "0") return ErrorModelKind::M0;
    if (s == "M1" || s == "1") return ErrorModelKind::M1;
    if (s == "M2" || s == "2") return ErrorModelKind::M2;
    if (s == "M3" || s == "3") return ErrorModelKind::M3;
    return std::nullopt;
}

std::uint64_t cell_bit_index(const DramAddress& addr, std::uint32_t bit, const DramGeometry& g) {
    if (bit >= g.word_bits) throw AddressError("address: bit index beyond word width");
    return linearize(addr, g) * g.word_bits + bit;
}

WeakCellMap::WeakCellMap(const DramGeometry& geom, ErrorModelKind kind, std::uint64_t seed,
                         std::vector<WeakCell> cells)
    : geom_(geom), kind_(kind), seed_(seed), cells_(std::move(cells)) {
    geom_.validate();
    std::sort(cells_.begin(), cells_.end(),
              [](const WeakCell& a, const WeakCell& b) { return a.bit_index < b.bit_index; });
    const std::uint64_t capacity = geom_.capacity_bits();
    for (std::size_t i = 0; i < cells_.size(); ++i) {
        const auto& c = cells_[i];
        if (c.bit_index >= capacity) throw AddressError("weak cell beyond device capacity");
        if (!(c.p_one >= 0.0 && c.p_one <= 1.0 && c.p_zero >= 0.0 && c.p_zero <= 1.0)) {
            throw ParameterError("weak cell probability outside [0, 1]");
        }
        if (i > 0 && cells_[i - 1].bit_index == c.bit_index) {
            throw ParameterError("duplicate weak cell at bit " + std::to_string(c.bit_index));
        }
    }
}

const WeakCell* WeakCellMap::find(std::uint64_t bit_index) const noexcept {
    const auto it = std::lower_bound(
        cells_.begin(), cells_.end(), bit_index,
        [](const WeakCell& c, std::uint64_t idx) { return c.bit_index < idx; });
    return it != cells_.end() && it->bit_index == bit_index ? &*it : nullptr;
}

DramAddress WeakCellMap::address_of(const WeakCell& cell) const {
    return delinearize(cell.bit_index / geom_.word_bits, geom_);
}

std::uint32_t WeakCellMap::bit_of(const WeakCell& cell) const noexcept {
    return static_cast<std::uint32_t>(cell.bit_index % geom_.word_bits);
}

std::pair<std::size_t, std::size_t> WeakCellMap::word_range(std::uint64_t first_word,
                                                            std::uint64_t last_word) const noexcept {
    auto lower = [&](std::uint64_t bit) {
        return static_cast<std::size_t>(
            std::lower_bound(cells_.begin(), cells_.end(), bit,
                             [](const WeakCell& c, std::uint64_t idx) { return c.bit_index < idx; }) -
            cells_.begin());
    };
    return {lower(first_word * geom_.word_bits), lower(last_word * geom_.word_bits)};
}

WeakCellMap generate_map(ErrorModelKind kind, double target_ber, const DramGeometry& geom,
                         std::uint64_t seed, const ErrorModelParams& params) {
    geom.validate();
    if (!(target_ber >= 0.0 && target_ber <= 1.0)) {
        throw ParameterError("error model: target_ber must lie in [0, 1]");
    }
    if (!(params.p_fault > 0.0 && params.p_fault <= 1.0)) {
        throw ParameterError("error model: p_fault must lie in (0, 1]");
    }
    std::vector<WeakCell> cells;
    if (target_ber == 0.0) return WeakCellMap(geom, kind, seed, std::move(cells));

    switch (kind) {
        case ErrorModelKind::M0:
        case ErrorModelKind::M3: {
            double p_one = params.p_fault;
            double p_zero = params.p_fault;
            if (kind == ErrorModelKind::M3) {
                p_one = params.p_one;
                p_zero = params.p_zero;
                if (!(p_one >= 0.0 && p_one <= 1.0 && p_zero >= 0.0 && p_zero <= 1.0) ||
                    p_one + p_zero <= 0.0) {
                    throw ParameterError("error model: M3 needs p_one, p_zero in [0, 1], not both 0");
                }
            }
            const double p_weak = target_ber / (0.5 * (p_one + p_zero));
            if (p_weak > 1.0 + 1e-12) {
                throw ParameterError("error model: target_ber unreachable with given flip probabilities");
            }
            UniformSource rng(derive_seed(seed, "weak-cells"));
            bernoulli_positions(geom.capacity_bits(), p_weak, rng, [&](std::uint64_t bit) {
                cells.push_back(WeakCell{bit, p_one, p_zero});
            });
            break;
        }
        case ErrorModelKind::M1: {
            // Bitline = (subarray, column, bit); its cells are the rows.
            const std::uint64_t lines = std::uint64_t{geom.n_su} * geom.n_co * geom.word_bits;
            const auto [weak_lines, q] = line_split(target_ber, lines, params.p_fault);
            for (std::uint64_t bank = 0; bank < geom.bank_count(); ++bank) {
                UniformSource rng(derive_seed(seed, "bitlines", bank));
                DramAddress a = bank_origin(bank, geom);
                for (std::uint64_t line : choose_distinct(lines, weak_lines, rng)) {
                    const auto bit = static_cast<std::uint32_t>(line % geom.word_bits);
                    a.co = static_cast<std::uint32_t>((line / geom.word_bits) % geom.n_co);
                    a.su = static_cast<std::uint32_t>(line / geom.word_bits / geom.n_co);
                    bernoulli_positions(geom.n_ro, q, rng, [&](std::uint64_t ro) {
                        a.ro = static_cast<std::uint32_t>(ro);
                        cells.push_back(WeakCell{cell_bit_index(a, bit, geom), params.p_fault,
                                                 params.p_fault});
                    });
                }
            }
            break;
        }
        case ErrorModelKind::M2: {
            // Wordline = (subarray, row); its cells are every bit of every column.
            const std::uint64_t lines = std::uint64_t{geom.n_su} * geom.n_ro;
            const std::uint64_t per_line = std::uint64_t{geom.n_co} * geom.word_bits;
            const auto [weak_lines, q] = line_split(target_ber, lines, params.p_fault);
            for (std::uint64_t bank = 0; bank < geom.bank_count(); ++bank) {
                UniformSource rng(derive_seed(seed, "wordlines", bank));
                DramAddress a = bank_origin(bank, geom);
                for (std::uint64_t line : choose_distinct(lines, weak_lines, rng)) {
                    a.su = static_cast<std::uint32_t>(line / geom.n_ro);
                    a.ro = static_cast<std::uint32_t>(line % geom.n_ro);
                    bernoulli_positions(per_line, q, rng, [&](std::uint64_t k) {
                        a.co = static_cast<std::uint32_t>(k / geom.word_bits);
                        const auto bit = static_cast<std::uint32_t>(k % geom.word_bits);
                        cells.push_back(WeakCell{cell_bit_index(a, bit, geom), params.p_fault,
                                                 params.p_fault});
                    });
                }
            }
            break;
        }
    }
    return WeakCellMap(geom, kind, seed, std::move(cells));
}

WeightImage inject(const WeightImage& bits, const WeakCellMap& map, const MappingPlan& plan,
                   std::uint64_t seed) {
    if (bits.count() != plan.size()) {
        throw ConsistencyError("inject: image holds " + std::to_string(bits.count()) +
                               " words but plan maps " + std::to_string(plan.size()));
    }
    if (!(map.geometry() == plan.geometry())) {
        throw ConsistencyError("inject: weak-cell map and plan use different geometries");
    }
    WeightImage out = bits;
    if (map.empty()) return out;
    const auto& cells = map.cells();
    const std::uint32_t word_bits = map.geometry().word_bits;
    for (std::size_t i = 0; i < plan.size(); ++i) {
        const std::uint64_t word = linearize(plan[i], plan.geometry());
        const auto [first, last] = map.word_range(word, word + 1);
        for (std::size_t c = first; c < last; ++c) {
            const auto bit = static_cast<std::uint32_t>(cells[c].bit_index % word_bits);
            if (bit >= 32) continue; // wider DRAM words than FP32 hold no weight bits there
            const bool stored = (bits.words[i] >> bit) & 1U;
            if (hashed_uniform(seed, cells[c].bit_index) < cells[c].p_for(stored)) {
                out.words[i] ^= (1U << bit);
            }
        }
    }
    return out;
}

std::vector<std::uint64_t> realize_flips(const WeakCellMap& map, std::uint64_t seed) {
    std::vector<std::uint64_t> flips;
    for (const auto& c : map.cells()) {
        if (hashed_uniform(seed, c.bit_index) < c.p_zero) flips.push_back(c.bit_index);
    }
    return flips;
}

SubarrayRates::SubarrayRates(const DramGeometry& geom, std::vector<double> rates)
    : geom_(geom), rates_(std::move(rates)) {
    if (rates_.size() != geom_.subarray_count()) {
        throw ConsistencyError("subarray rates: expected " + std::to_string(geom_.subarray_count()) +
                               " entries, got " + std::to_string(rates_.size()));
    }
    for (double r : rates_) {
        if (!(r >= 0.0 && r <= 1.0)) throw ParameterError("subarray rate outside [0, 1]");
    }
}

SubarrayRates SubarrayRates::uniform(const DramGeometry& geom, double rate) {
    return SubarrayRates(geom, std::vector<double>(geom.subarray_count(), rate));
}

SubarrayRates subarray_rates(const WeakCellMap& map) {
    const auto& g = map.geometry();
    std::vector<double> sums(g.subarray_count(), 0.0);
    for (const auto& c : map.cells()) sums[subarray_index(map.address_of(c), g)] += c.p();
    const double bits = static_cast<double>(g.bits_per_subarray());
    for (double& s : sums) s /= bits;
    return SubarrayRates(g, std::move(sums));
}

void write_map_jsonl(std::ostream& os, const WeakCellMap& map) {
    using detail::format_double;
    for (const auto& c : map.cells()) {
        const DramAddress a = map.address_of(c);
        os << "{\"ch\":" << a.ch << ",\"ra\":" << a.ra << ",\"cp\":" << a.cp << ",\"ba\":" << a.ba
           << ",\"su\":" << a.su << ",\"ro\":" << a.ro << ",\"co\":" << a.co
           << ",\"bit\":" << map.bit_of(c) << ",\"p\":" << format_double(c.p());
        if (c.p_one != c.p_zero) {
            os << ",\"p1\":" << format_double(c.p_one) << ",\"p0\":" << format_double(c.p_zero);
        }
        os << "}\n";
    }
}

WeakCellMap read_map_jsonl(std::istream& is, const DramGeometry& geom, ErrorModelKind kind,
                           std::uint64_t seed) {
    std::vector<WeakCell> cells;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            DramAddress a{j.at("ch").get<std::uint32_t>(), j.at("ra").get<std::uint32_t>(),
                          j.at("cp").get<std::uint32_t>(), j.at("ba").get<std::uint32_t>(),
                          j.at("su").get<std::uint32_t>(), j.at("ro").get<std::uint32_t>(),
                          j.at("co").get<std::uint32_t>()};
            const auto bit = j.at("bit").get<std::uint32_t>();
            WeakCell cell{cell_bit_index(a, bit, geom), 0.0, 0.0};
            if (j.contains("p1")) {
                cell.p_one = j.at("p1").get<double>();
                cell.p_zero = j.at("p0").get<double>();
                kind = ErrorModelKind::M3;
            } else {
                cell.p_one = cell.p_zero = j.at("p").get<double>();
            }
            cells.push_back(cell);
        } catch (const nlohmann::json::exception& e) {
            throw IoError("weak-cell map: line " + std::to_string(line_no) + ": " + e.what());
        } catch (const AddressError& e) {
            throw IoError("weak-cell map: line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return WeakCellMap(geom, kind, seed, std::move(cells));
}

}  // namespace axdram
