#include "axdram/voltage.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "axdram/errors.hpp"

namespace axdram {

namespace {

constexpr double kVoltageEps = 1e-9;

// Smallest t with pred(t) true, for pred monotone false -> true.
template <class Pred>
double first_crossing(Pred pred, double scale) {
    double lo = 0.0;
    double hi = scale;
    while (!pred(hi)) {
        lo = hi;
        hi *= 2.0;
    }
    for (int i = 0; i < 200 && hi - lo > 1e-13 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        (pred(mid) ? hi : lo) = mid;
    }
    return hi;
}

double round_up_to_grid(double t, double grid) {
    return std::ceil(t / grid - 1e-9) * grid;
}

}  // namespace

void check_voltage(double v) {
    if (!(v >= kMinVoltage - kVoltageEps && v <= kNominalVoltage + kVoltageEps)) {
        std::ostringstream os;
        os << "supply voltage " << v << " V outside supported range [" << kMinVoltage << ", "
           << kNominalVoltage << "] V";
        throw UnsupportedVoltageError(os.str());
    }
}

void ArrayVoltageModel::validate() const {
    if (!(tau_nominal_ns > 0.0)) throw ParameterError("tau_nominal_ns must be > 0");
    if (!(tau_exponent >= 0.0)) throw ParameterError("tau_exponent must be >= 0");
}

double ArrayVoltageModel::tau_ns(double v) const {
    return tau_nominal_ns * std::pow(kNominalVoltage / v, tau_exponent);
}

double array_voltage(double t, ArrayPhase phase, double v, const ArrayVoltageModel& model) {
    if (t < 0.0) throw ParameterError("array_voltage: t must be >= 0");
    const double half = 0.5 * v;
    const double decay = std::exp(-t / model.tau_ns(v));
    return phase == ArrayPhase::Activation ? half + half * (1.0 - decay) : half + half * decay;
}

TimingParams derive_timing(double v, const ArrayVoltageModel& model, double t_ck_ns) {
    check_voltage(v);
    model.validate();
    if (!(t_ck_ns > 0.0)) throw ParameterError("t_ck_ns must be > 0");
    const double tau = model.tau_ns(v);
    const double half = 0.5 * v;

    const double rcd = first_crossing(
        [&](double t) { return array_voltage(t, ArrayPhase::Activation, v, model) >= kReadyToAccess * v; },
        tau);
    const double ras = first_crossing(
        [&](double t) {
            return array_voltage(t, ArrayPhase::Activation, v, model) >= kReadyToPrecharge * v;
        },
        tau);
    const double rp = first_crossing(
        [&](double t) {
            return std::abs(array_voltage(t, ArrayPhase::Precharge, v, model) - half) <=
                   kReadyToActivate * half;
        },
        tau);

    return TimingParams{round_up_to_grid(rcd, t_ck_ns), round_up_to_grid(ras, t_ck_ns),
                        round_up_to_grid(rp, t_ck_ns)};
}

double EnergyCalibration::offset_pp(double v) const {
    if (offsets_pp.empty()) return 0.0;
    auto pts = offsets_pp;
    std::sort(pts.begin(), pts.end());
    if (v < pts.front().first - kVoltageEps || v > pts.back().first + kVoltageEps) return 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (std::abs(pts[i].first - v) <= kVoltageEps) return pts[i].second;
    }
    const auto hi = std::upper_bound(pts.begin(), pts.end(), std::pair{v, -1e300});
    const auto lo = hi - 1;
    const double f = (v - lo->first) / (hi->first - lo->first);
    return lo->second + f * (hi->second - lo->second);
}

double energy_scale(double v, const EnergyCalibration& calibration) {
    check_voltage(v);
    const double ratio = v / kNominalVoltage;
    const double scale = ratio * ratio - calibration.offset_pp(v) / 100.0;
    if (!(scale > 0.0 && scale <= 1.0 + 1e-12)) {
        throw ParameterError("energy calibration drives the energy scale outside (0, 1]");
    }
    return std::min(scale, 1.0);
}

// ---------------------------------------------------------------------------

BerProfile::BerProfile(std::vector<std::pair<double, double>> points) : points_(std::move(points)) {
    if (points_.empty()) throw ParameterError("ber profile: empty");
    std::sort(points_.begin(), points_.end());
    for (std::size_t i = 0; i < points_.size(); ++i) {
        const auto [v, ber] = points_[i];
        if (!(ber >= 0.0 && ber <= 1.0)) throw ParameterError("ber profile: ber outside [0, 1]");
        if (i > 0 && std::abs(points_[i - 1].first - v) <= kVoltageEps) {
            throw ParameterError("ber profile: duplicate voltage");
        }
        if (i > 0 && ber > points_[i - 1].second) {
            throw ParameterError("ber profile: ber must be non-increasing in voltage");
        }
    }
    const auto& top = points_.back();
    if (std::abs(top.first - kNominalVoltage) > kVoltageEps || top.second != 0.0) {
        throw ParameterError("ber profile: highest entry must be (1.35 V, 0)");
    }
}

BerProfile BerProfile::illustrative() {
    return BerProfile({{1.025, 1e-4}, {1.100, 1e-5}, {1.175, 1e-6}, {1.250, 1e-7}, {1.325, 1e-8},
                       {1.350, 0.0}});
}

double BerProfile::ber_at(double v) const {
    if (v < points_.front().first - kVoltageEps) {
        std::ostringstream os;
        os << "ber profile: " << v << " V below lowest characterized voltage "
           << points_.front().first << " V";
        throw UnsupportedVoltageError(os.str());
    }
    if (v > points_.back().first + kVoltageEps) {
        throw UnsupportedVoltageError("ber profile: voltage above nominal");
    }
    for (const auto& [pv, ber] : points_) {
        if (std::abs(pv - v) <= kVoltageEps) return ber;
    }
    const auto hi = std::upper_bound(points_.begin(), points_.end(), std::pair{v, -1.0});
    const auto lo = hi - 1;
    const double f = (v - lo->first) / (hi->first - lo->first);
    if (lo->second > 0.0 && hi->second > 0.0) {
        return std::exp(std::log(lo->second) + f * (std::log(hi->second) - std::log(lo->second)));
    }
    return lo->second + f * (hi->second - lo->second);
}

VoltageOperatingPoint VoltageOperatingPoint::make(double v, const ArrayVoltageModel& model,
                                                  const BerProfile& profile,
                                                  const EnergyCalibration& calibration,
                                                  double t_ck_ns) {
    VoltageOperatingPoint op;
    op.v_supply = v;
    op.timing = derive_timing(v, model, t_ck_ns);
    op.energy_scale = axdram::energy_scale(v, calibration);
    op.ber = profile.ber_at(v);
    return op;
}

}  // namespace axdram
