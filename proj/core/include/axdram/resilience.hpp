#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "axdram/dataset.hpp"
#include "axdram/dram.hpp"
#include "axdram/error_model.hpp"
#include "axdram/snn.hpp"

namespace axdram {

/// Strictly increasing error rates in (0, 1].
struct BerSchedule {
    std::vector<double> rates;

    /// Throws ParameterError.
    void validate() const;

    /// first, first*factor, ... (n rates).
    static BerSchedule geometric(double first, std::size_t n, double factor = 10.0);
};

/// Where the weights live and how the device fails.
struct DramContext {
    DramGeometry geom;
    ErrorModelKind model = ErrorModelKind::M0;
    ErrorModelParams params;
};

/// Copy of `model` whose weights went through baseline-mapped DRAM with a
/// fresh weak-cell map at `rate`.
SnnModel inject_model(const SnnModel& model, const DramContext& dram, double rate, std::uint64_t seed);

/// The steps of the hardening loop, so the search can run against a stand-in.
class LearningBackend {
  public:
    virtual ~LearningBackend() = default;

    /// Corrupt the working model at schedule position `index`.
    virtual void inject(double rate, std::size_t index) = 0;
    virtual void train(std::size_t index) = 0;
    /// Test accuracy of the working model, percent.
    virtual double evaluate(std::size_t index) = 0;
    /// Remember the working model as the current best.
    virtual void record(std::size_t index) = 0;
};

struct SearchOutcome {
    std::vector<double> accuracies; ///< percent, one per rate
    std::optional<std::size_t> threshold_index;
};

/// Inject, train, test at every rate in order; the last rate whose accuracy
/// is >= acc_model0 - acc_bound becomes the threshold.
SearchOutcome fault_aware_search(LearningBackend& backend, const BerSchedule& schedule, double acc_model0,
                                 double acc_bound);

/// Last index whose accuracy meets the bound, by a full linear scan.
std::optional<std::size_t> select_ber_threshold(std::span<const double> accuracies, double acc_model0,
                                                double acc_bound);

struct ResilienceResult {
    std::vector<double> rates;
    std::vector<double> baseline_curve; ///< percent; empty until filled by tolerance_curve
    std::vector<double> improved_curve; ///< percent, accuracy after hardening at each rate
    std::optional<double> ber_th;
    double acc_model0 = 0.0;
    std::optional<double> acc_model1;
    std::optional<SnnModel> model_1;
};

struct FaultTrainingOptions {
    std::size_t n_epoch = 1;
    double acc_bound = 1.0;      ///< percentage points
    std::uint64_t seed = 0;      ///< per-rate maps and training order
    std::uint64_t eval_seed = 0; ///< shared by every test-set evaluation
    unsigned jobs = 1;
};

/// Hardening loop on the SNN. Training state carries over between rates;
/// labels are recomputed on `train` after every rate.
ResilienceResult fault_aware_train(const SnnModel& model_0, double acc_model0, const BerSchedule& schedule,
                                   const DramContext& dram, const Dataset& train, const Dataset& test,
                                   const FaultTrainingOptions& options);

struct ToleranceCurve {
    std::vector<double> rates;
    std::vector<double> mean;                 ///< percent
    std::vector<std::vector<double>> per_seed; ///< [rate][seed], percent
};

/// Accuracy of `model` read back from DRAM at each rate (0 allowed), averaged
/// over one fresh map per seed. No training, labels untouched.
ToleranceCurve tolerance_curve(const SnnModel& model, std::span<const double> rates, const DramContext& dram,
                               const Dataset& test, std::span<const std::uint64_t> seeds,
                               std::uint64_t eval_seed, unsigned jobs = 1);

/// JSON: {rates, baseline_curve, improved_curve, ber_th, acc_model0, acc_model1}
void write_resilience_json(std::ostream& os, const ResilienceResult& result);
ResilienceResult read_resilience_json(std::istream& is);

}  // namespace axdram
