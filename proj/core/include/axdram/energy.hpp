#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "axdram/dram.hpp"
#include "axdram/voltage.hpp"
#include "axdram/weight_storage.hpp"

namespace axdram {

/// Per-command energies at the nominal supply, pJ per access. These are
/// calibration inputs, not device measurements.
struct AccessEnergyTable {
    double e_act = 6.9;
    double e_rd = 4.6;
    double e_wr = 4.6;
    double e_pre = 4.6;

    /// Throws ParameterError unless every entry is positive and finite.
    void validate() const;

    double hit() const noexcept { return e_rd; }
    double miss() const noexcept { return e_act + e_rd; }
    double conflict() const noexcept { return e_pre + e_act + e_rd; }
    double of(AccessCondition c, AccessKind kind = AccessKind::Read) const noexcept;
};

struct EnergyBreakdown {
    double hit_pj = 0.0;
    double miss_pj = 0.0;
    double conflict_pj = 0.0;

    double total() const noexcept { return hit_pj + miss_pj + conflict_pj; }
};

struct EnergyReport {
    std::string workload; ///< what was fetched; speedup() refuses to mix workloads
    double v_supply = kNominalVoltage;
    double energy_scale = 1.0;
    double total_pj = 0.0;
    EnergyBreakdown breakdown;
    AccessCounts counts;
    std::uint64_t cycles = 0;
    std::optional<double> speedup;
    std::string reference;
};

/// Cycle timing of an operating point on `clock`.
CycleTiming cycle_timing(const TimingParams& timing, const DeviceClock& clock = {});

/// Timing at 1.35 V under the default array model.
CycleTiming nominal_cycle_timing(const DeviceClock& clock = {});

/// One RD per weight word in plan order, from all-closed row buffers.
AccessTrace trace_inference(const MappingPlan& plan, const CycleTiming& timing = nominal_cycle_timing(),
                            std::uint32_t n_burst_banks = 4);

/// Condition energies scaled by the operating point; cycles from the burst
/// scheduler at the operating point's timing.
EnergyReport energy_of(const AccessTrace& trace, const AccessEnergyTable& table,
                       const VoltageOperatingPoint& op, std::string workload = {},
                       const DeviceClock& clock = {}, std::uint32_t n_burst_banks = 4);

/// reference.cycles / report.cycles. Throws ComparisonError when the two
/// reports describe different workloads or access totals.
double speedup(const EnergyReport& report, const EnergyReport& reference);

/// 100 * (1 - report / reference) in total energy, after the same
/// workload check as speedup().
double saving_pct(const EnergyReport& report, const EnergyReport& reference);

void write_report_json(std::ostream& os, const EnergyReport& report);
EnergyReport read_report_json(std::istream& is);

/// One line of the energy table.
struct EnergyRow {
    double voltage = kNominalVoltage;
    std::string network;
    std::string flavor;
    double total_pj = 0.0;
    AccessCounts counts;
    std::uint64_t cycles = 0;
    double saving_pct = 0.0;
    double speedup = 1.0;

    bool operator==(const EnergyRow&) const = default;
};

EnergyRow make_row(const EnergyReport& report, std::string network, std::string flavor,
                   const EnergyReport& reference);

/// CSV columns: voltage,network,flavor,total_pj,hits,misses,conflicts,cycles,saving_pct,speedup
void write_energy_csv(std::ostream& os, std::span<const EnergyRow> rows, bool header = true);
std::vector<EnergyRow> read_energy_csv(std::istream& is);

}  // namespace axdram
