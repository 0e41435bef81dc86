#include "axdram/weight_storage.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <string>

#include "axdram/errors.hpp"
#include "text_util.hpp"

namespace axdram {

static_assert(std::numeric_limits<float>::is_iec559, "FP32 weights require IEEE-754 floats");

WeightImage encode(std::span<const float> weights) {
    WeightImage image;
    image.words.reserve(weights.size());
    for (float w : weights) image.words.push_back(std::bit_cast<std::uint32_t>(w));
    return image;
}

std::vector<float> decode(const WeightImage& image) {
    std::vector<float> out;
    out.reserve(image.count());
    for (std::uint32_t word : image.words) out.push_back(std::bit_cast<float>(word));
    return out;
}

void sanitize_weights(std::span<float> weights, float lo, float hi) {
    for (float& w : weights) {
        if (std::isnan(w)) w = lo;
        w = std::clamp(w, lo, hi);
    }
}

std::string_view to_string(MappingFlavor flavor) noexcept {
    return flavor == MappingFlavor::Baseline ? "baseline" : "safe-subarray";
}

std::optional<MappingFlavor> parse_flavor(std::string_view s) noexcept {
    if (s == "baseline") return MappingFlavor::Baseline;
    if (s == "safe-subarray" || s == "safe") return MappingFlavor::SafeSubarray;
    return std::nullopt;
}

MappingPlan::MappingPlan(const DramGeometry& geom, MappingFlavor flavor,
                         std::vector<DramAddress> addresses, std::optional<double> ber_threshold)
    : geom_(geom), flavor_(flavor), addresses_(std::move(addresses)), ber_threshold_(ber_threshold) {
    geom_.validate();
    if (geom_.word_bits != 32) throw ParameterError("mapping: word_bits must be 32 (one FP32 weight per word)");
    std::vector<std::uint64_t> words;
    words.reserve(addresses_.size());
    for (const auto& a : addresses_) words.push_back(linearize(a, geom_));
    std::sort(words.begin(), words.end());
    if (std::adjacent_find(words.begin(), words.end()) != words.end()) {
        throw ConsistencyError("mapping: two weights share a DRAM word");
    }
}

MappingPlan plan_baseline(std::size_t n_weights, const DramGeometry& geom) {
    geom.validate();
    if (n_weights > geom.capacity_words()) {
        throw CapacityError("baseline mapping: " + std::to_string(n_weights) +
                            " weights exceed capacity of " + std::to_string(geom.capacity_words()) +
                            " words");
    }
    std::vector<DramAddress> out;
    out.reserve(n_weights);
    DramAddress a;
    for (a.ch = 0; a.ch < geom.n_ch; ++a.ch)
        for (a.ra = 0; a.ra < geom.n_ra; ++a.ra)
            for (a.cp = 0; a.cp < geom.n_cp; ++a.cp)
                for (a.ba = 0; a.ba < geom.n_ba; ++a.ba)
                    for (a.su = 0; a.su < geom.n_su; ++a.su)
                        for (a.ro = 0; a.ro < geom.n_ro; ++a.ro)
                            for (a.co = 0; a.co < geom.n_co; ++a.co) {
                                if (out.size() == n_weights) goto done;
                                out.push_back(a);
                            }
done:
    return MappingPlan(geom, MappingFlavor::Baseline, std::move(out));
}

std::uint64_t safe_capacity_words(const SubarrayRates& rates, double ber_threshold) {
    const auto& g = rates.geometry();
    const auto safe = std::count_if(rates.values().begin(), rates.values().end(),
                                    [&](double r) { return r <= ber_threshold; });
    return static_cast<std::uint64_t>(safe) * g.n_ro * g.n_co;
}

MappingPlan plan_safe_subarray(std::size_t n_weights, const DramGeometry& geom,
                               const SubarrayRates& rates, double ber_threshold) {
    geom.validate();
    if (!(rates.geometry() == geom)) {
        throw ConsistencyError("safe-subarray mapping: rates computed for a different geometry");
    }
    const std::uint64_t safe = safe_capacity_words(rates, ber_threshold);
    if (n_weights > safe) {
        throw CapacityError("safe-subarray mapping: " + std::to_string(n_weights) +
                            " weights but only " + std::to_string(safe) +
                            " words in safe subarrays (shortfall " +
                            std::to_string(n_weights - safe) + ")");
    }
    std::vector<DramAddress> out;
    out.reserve(n_weights);
    DramAddress a;
    for (a.ch = 0; a.ch < geom.n_ch; ++a.ch)
        for (a.ra = 0; a.ra < geom.n_ra; ++a.ra)
            for (a.cp = 0; a.cp < geom.n_cp; ++a.cp)
                for (a.ro = 0; a.ro < geom.n_ro; ++a.ro)
                    for (a.su = 0; a.su < geom.n_su; ++a.su)
                        for (a.ba = 0; a.ba < geom.n_ba; ++a.ba) {
                            if (!(rates.rate_at(a) <= ber_threshold)) continue;
                            for (a.co = 0; a.co < geom.n_co; ++a.co) {
                                if (out.size() == n_weights) goto done;
                                out.push_back(a);
                            }
                            a.co = 0;
                        }
done:
    return MappingPlan(geom, MappingFlavor::SafeSubarray, std::move(out), ber_threshold);
}

StoredImage store(std::span<const float> weights, const MappingPlan& plan) {
    if (weights.size() != plan.size()) {
        throw ConsistencyError("store: " + std::to_string(weights.size()) + " weights but plan maps " +
                               std::to_string(plan.size()));
    }
    StoredImage out;
    out.word_addresses.reserve(plan.size());
    for (const auto& a : plan.addresses()) out.word_addresses.push_back(linearize(a, plan.geometry()));
    out.image = encode(weights);
    return out;
}

std::vector<float> load(const StoredImage& stored, const MappingPlan& plan) {
    if (stored.word_addresses.size() != plan.size() || stored.image.count() != plan.size()) {
        throw ConsistencyError("load: stored image size does not match plan");
    }
    for (std::size_t i = 0; i < plan.size(); ++i) {
        if (stored.word_addresses[i] != linearize(plan[i], plan.geometry())) {
            throw ConsistencyError("load: weight " + std::to_string(i) +
                                   " was stored at a different address than the plan says");
        }
    }
    return decode(stored.image);
}

// ---------------------------------------------------------------------------

namespace {

template <class T>
void put_le(std::ostream& os, T value) {
    std::array<char, sizeof(T)> bytes{};
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        bytes[i] = static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xFF);
    }
    os.write(bytes.data(), bytes.size());
}

template <class T>
T get_le(const unsigned char* p) {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= std::uint64_t{p[i]} << (8 * i);
    return static_cast<T>(v);
}

}  // namespace

void write_weight_snapshot(std::ostream& os, std::span<const float> weights) {
    if (weights.size() > 0xFFFFFFFFULL) throw ParameterError("snapshot: too many weights");
    os.write("SPXD", 4);
    put_le<std::uint16_t>(os, kSnapshotVersion);
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(weights.size()));
    const std::array<char, 6> reserved{};
    os.write(reserved.data(), reserved.size());
    for (float w : weights) put_le<std::uint32_t>(os, std::bit_cast<std::uint32_t>(w));
    if (!os) throw IoError("snapshot: write failed");
}

std::vector<float> read_weight_snapshot(std::istream& is) {
    std::array<unsigned char, 16> header{};
    if (!is.read(reinterpret_cast<char*>(header.data()), header.size())) {
        throw IoError("snapshot: truncated header");
    }
    if (header[0] != 'S' || header[1] != 'P' || header[2] != 'X' || header[3] != 'D') {
        throw IoError("snapshot: bad magic");
    }
    const auto version = get_le<std::uint16_t>(header.data() + 4);
    if (version != kSnapshotVersion) {
        throw IoError("snapshot: unsupported version " + std::to_string(version));
    }
    const auto count = get_le<std::uint32_t>(header.data() + 6);
    std::vector<float> out(count);
    std::array<unsigned char, 4> word{};
    for (std::uint32_t i = 0; i < count; ++i) {
        if (!is.read(reinterpret_cast<char*>(word.data()), word.size())) {
            throw IoError("snapshot: truncated payload at weight " + std::to_string(i));
        }
        out[i] = std::bit_cast<float>(get_le<std::uint32_t>(word.data()));
    }
    return out;
}

void write_plan_csv(std::ostream& os, const MappingPlan& plan) {
    os << "weight_index,ch,ra,cp,ba,su,ro,co\n";
    for (std::size_t i = 0; i < plan.size(); ++i) {
        const auto& a = plan[i];
        os << i << ',' << a.ch << ',' << a.ra << ',' << a.cp << ',' << a.ba << ',' << a.su << ','
           << a.ro << ',' << a.co << '\n';
    }
}

MappingPlan read_plan_csv(std::istream& is, const DramGeometry& geom, MappingFlavor flavor,
                          std::optional<double> ber_threshold) {
    std::string line;
    if (!std::getline(is, line)) throw IoError("plan csv: missing header");
    std::vector<DramAddress> addrs;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != 8) {
            throw IoError("plan csv: line " + std::to_string(line_no) + " needs 8 fields");
        }
        try {
            if (std::stoull(cells[0]) != addrs.size()) {
                throw IoError("weight indices must be consecutive from 0");
            }
            auto u = [&](int k) { return static_cast<std::uint32_t>(std::stoul(cells[k])); };
            addrs.push_back(DramAddress{u(1), u(2), u(3), u(4), u(5), u(6), u(7)});
        } catch (const std::logic_error& e) {
            throw IoError("plan csv: line " + std::to_string(line_no) + ": " + e.what());
        } catch (const IoError& e) {
            throw IoError("plan csv: line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return MappingPlan(geom, flavor, std::move(addrs), ber_threshold);
}

}  // namespace axdram
