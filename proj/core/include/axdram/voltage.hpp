#pragma once

#include <utility>
#include <vector>

#include "axdram/dram.hpp"

namespace axdram {

inline constexpr double kNominalVoltage = 1.35;
inline constexpr double kMinVoltage = 1.025;

/// Throws UnsupportedVoltageError outside [kMinVoltage, kNominalVoltage].
void check_voltage(double v_supply);

/// First-order RC stand-in for the bitline/array charging circuit.
/// tau(V) = tau_nominal * (V_nominal / V)^tau_exponent.
struct ArrayVoltageModel {
    double tau_nominal_ns = 10.0;
    double tau_exponent = 1.0;

    void validate() const;
    double tau_ns(double v_supply) const;
};

enum class ArrayPhase { Activation, Precharge };

/// Array voltage `t_ns` after the start of an activation (rising from
/// v_supply/2 toward v_supply) or a precharge (falling from v_supply back to
/// v_supply/2).
double array_voltage(double t_ns, ArrayPhase phase, double v_supply,
                     const ArrayVoltageModel& model);

// Readiness thresholds on the array voltage.
inline constexpr double kReadyToAccess = 0.75;    ///< fraction of v_supply, ends tRCD
inline constexpr double kReadyToPrecharge = 0.98; ///< fraction of v_supply, ends tRAS
inline constexpr double kReadyToActivate = 0.02;  ///< band around v_supply/2, ends tRP

/// Searches the array-voltage trajectory for the three readiness crossings
/// and rounds each up to the `t_ck_ns` grid.
TimingParams derive_timing(double v_supply, const ArrayVoltageModel& model,
                           double t_ck_ns = DeviceClock{}.t_ck_ns);

/// Per-voltage additive corrections (percentage points of saving) on top of
/// the V^2 law. Linear between entries, zero outside the covered range.
struct EnergyCalibration {
    std::vector<std::pair<double, double>> offsets_pp;

    double offset_pp(double v_supply) const;
};

/// Energy per access relative to nominal: (v/1.35)^2 less any calibration.
double energy_scale(double v_supply, const EnergyCalibration& calibration = {});

/// 1 - energy_scale, as a fraction.
inline double per_access_saving(double v_supply, const EnergyCalibration& calibration = {}) {
    return 1.0 - energy_scale(v_supply, calibration);
}

/// Voltage -> bit error rate table. Must contain (1.35, 0).
class BerProfile {
  public:
    explicit BerProfile(std::vector<std::pair<double, double>> points);

    /// Illustrative shape only: 1e-8 at 1.325 V rising tenfold per 75 mV
    /// to 1e-4 at 1.025 V. Not a device measurement.
    static BerProfile illustrative();

    /// Exact entries are returned as-is; between entries log-linear, or
    /// linear when one neighbour is zero. Throws UnsupportedVoltageError
    /// outside the table.
    double ber_at(double v_supply) const;

    const std::vector<std::pair<double, double>>& points() const noexcept { return points_; }

  private:
    std::vector<std::pair<double, double>> points_; // ascending voltage
};

inline double ber_at(double v_supply, const BerProfile& profile) {
    return profile.ber_at(v_supply);
}

struct VoltageOperatingPoint {
    double v_supply = kNominalVoltage;
    TimingParams timing;
    double energy_scale = 1.0;
    double ber = 0.0;

    static VoltageOperatingPoint make(double v_supply, const ArrayVoltageModel& model,
                                      const BerProfile& profile,
                                      const EnergyCalibration& calibration = {},
                                      double t_ck_ns = DeviceClock{}.t_ck_ns);
};

}  // namespace axdram
