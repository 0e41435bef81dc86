#include "axdram/energy.hpp"

#include <cmath>
#include <istream>
#include <json.hpp>
#include <ostream>

#include "axdram/errors.hpp"
#include "text_util.hpp"

namespace axdram {

void AccessEnergyTable::validate() const {
    for (double e : {e_act, e_rd, e_wr, e_pre}) {
        if (!(std::isfinite(e) && e > 0.0)) throw ParameterError("energy table: entries must be > 0");
    }
}

double AccessEnergyTable::of(AccessCondition c, AccessKind kind) const noexcept {
    const double column = kind == AccessKind::Write ? e_wr : e_rd;
    switch (c) {
        case AccessCondition::Hit: return column;
        case AccessCondition::Miss: return e_act + column;
        case AccessCondition::Conflict: return e_pre + e_act + column;
    }
    return column;
}

CycleTiming cycle_timing(const TimingParams& timing, const DeviceClock& clock) {
    return CycleTiming::from(timing, clock);
}

CycleTiming nominal_cycle_timing(const DeviceClock& clock) {
    return CycleTiming::from(derive_timing(kNominalVoltage, ArrayVoltageModel{}, clock.t_ck_ns), clock);
}

AccessTrace trace_inference(const MappingPlan& plan, const CycleTiming& timing,
                            std::uint32_t n_burst_banks) {
    DramSimulator sim(plan.geometry(), timing, n_burst_banks);
    for (const auto& addr : plan.addresses()) sim.access(addr, AccessKind::Read);
    return std::move(sim).take_trace();
}

EnergyReport energy_of(const AccessTrace& trace, const AccessEnergyTable& table,
                       const VoltageOperatingPoint& op, std::string workload, const DeviceClock& clock,
                       std::uint32_t n_burst_banks) {
    table.validate();
    EnergyReport r;
    r.workload = std::move(workload);
    r.v_supply = op.v_supply;
    r.energy_scale = op.energy_scale;
    r.counts = trace.counts();
    for (const auto& rec : trace.records()) {
        if (!rec.condition) continue;
        const auto kind = rec.command == Command::WR ? AccessKind::Write : AccessKind::Read;
        const double e = table.of(*rec.condition, kind) * op.energy_scale;
        switch (*rec.condition) {
            case AccessCondition::Hit: r.breakdown.hit_pj += e; break;
            case AccessCondition::Miss: r.breakdown.miss_pj += e; break;
            case AccessCondition::Conflict: r.breakdown.conflict_pj += e; break;
        }
    }
    r.total_pj = r.breakdown.total();
    if (!trace.empty()) r.cycles = burst_cycles(trace, cycle_timing(op.timing, clock), n_burst_banks);
    return r;
}

namespace {

void check_comparable(const EnergyReport& a, const EnergyReport& b) {
    if (a.workload != b.workload || a.counts.total() != b.counts.total()) {
        throw ComparisonError("reports describe different workloads ('" + a.workload + "', " +
                              std::to_string(a.counts.total()) + " accesses vs '" + b.workload + "', " +
                              std::to_string(b.counts.total()) + " accesses)");
    }
}

}  // namespace

double speedup(const EnergyReport& report, const EnergyReport& reference) {
    check_comparable(report, reference);
    if (report.cycles == 0) return reference.cycles == 0 ? 1.0 : 0.0;
    return static_cast<double>(reference.cycles) / static_cast<double>(report.cycles);
}

double saving_pct(const EnergyReport& report, const EnergyReport& reference) {
    check_comparable(report, reference);
    if (reference.total_pj == 0.0) return 0.0;
    return 100.0 * (1.0 - report.total_pj / reference.total_pj);
}

// ---------------------------------------------------------------------------

namespace {
using nlohmann::json;
}

void write_report_json(std::ostream& os, const EnergyReport& r) {
    json j{{"workload", r.workload},
           {"v_supply", r.v_supply},
           {"energy_scale", r.energy_scale},
           {"total_pj", r.total_pj},
           {"breakdown", {{"hit_pj", r.breakdown.hit_pj},
                          {"miss_pj", r.breakdown.miss_pj},
                          {"conflict_pj", r.breakdown.conflict_pj}}},
           {"hits", r.counts.hits},
           {"misses", r.counts.misses},
           {"conflicts", r.counts.conflicts},
           {"cycles", r.cycles}};
    j["speedup"] = r.speedup ? json(*r.speedup) : json(nullptr);
    j["reference"] = r.reference;
    os << j.dump(2) << '\n';
    if (!os) throw IoError("report: write failed");
}

EnergyReport read_report_json(std::istream& is) {
    try {
        json j;
        is >> j;
        EnergyReport r;
        r.workload = j.value("workload", std::string{});
        r.v_supply = j.at("v_supply").get<double>();
        r.energy_scale = j.at("energy_scale").get<double>();
        r.total_pj = j.at("total_pj").get<double>();
        const auto& b = j.at("breakdown");
        r.breakdown = {b.at("hit_pj").get<double>(), b.at("miss_pj").get<double>(),
                       b.at("conflict_pj").get<double>()};
        r.counts = {j.at("hits").get<std::uint64_t>(), j.at("misses").get<std::uint64_t>(),
                    j.at("conflicts").get<std::uint64_t>()};
        r.cycles = j.at("cycles").get<std::uint64_t>();
        if (j.contains("speedup") && !j["speedup"].is_null()) r.speedup = j["speedup"].get<double>();
        r.reference = j.value("reference", std::string{});
        return r;
    } catch (const json::exception& e) {
        throw IoError(std::string("report: ") + e.what());
    }
}

EnergyRow make_row(const EnergyReport& report, std::string network, std::string flavor,
                   const EnergyReport& reference) {
    EnergyRow row;
    row.voltage = report.v_supply;
    row.network = std::move(network);
    row.flavor = std::move(flavor);
    row.total_pj = report.total_pj;
    row.counts = report.counts;
    row.cycles = report.cycles;
    row.saving_pct = saving_pct(report, reference);
    row.speedup = speedup(report, reference);
    return row;
}

void write_energy_csv(std::ostream& os, std::span<const EnergyRow> rows, bool header) {
    using detail::format_double;
    if (header) os << "voltage,network,flavor,total_pj,hits,misses,conflicts,cycles,saving_pct,speedup\n";
    for (const auto& r : rows) {
        os << format_double(r.voltage) << ',' << r.network << ',' << r.flavor << ','
           << format_double(r.total_pj) << ',' << r.counts.hits << ',' << r.counts.misses << ','
           << r.counts.conflicts << ',' << r.cycles << ',' << format_double(r.saving_pct) << ','
           << format_double(r.speedup) << '\n';
    }
}

std::vector<EnergyRow> read_energy_csv(std::istream& is) {
    std::vector<EnergyRow> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty() || line.rfind("voltage,", 0) == 0) continue;
        const auto c = detail::split_csv_line(line);
        if (c.size() != 10) throw IoError("energy csv: line " + std::to_string(line_no) + " needs 10 fields");
        try {
            EnergyRow r;
            r.voltage = std::stod(c[0]);
            r.network = c[1];
            r.flavor = c[2];
            r.total_pj = std::stod(c[3]);
            r.counts = {std::stoull(c[4]), std::stoull(c[5]), std::stoull(c[6])};
            r.cycles = std::stoull(c[7]);
            r.saving_pct = std::stod(c[8]);
            r.speedup = std::stod(c[9]);
            rows.push_back(std::move(r));
        } catch (const std::logic_error& e) {
            throw IoError("energy csv: line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return rows;
}

}  // namespace axdram
