#include "axdram/resilience.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <json.hpp>
#include <ostream>

#include "axdram/errors.hpp"
#include "axdram/seeding.hpp"
#include "axdram/weight_storage.hpp"

namespace axdram {

void BerSchedule::validate() const {
    if (rates.empty()) throw ParameterError("ber schedule: no rates");
    for (std::size_t i = 0; i < rates.size(); ++i) {
        if (!(rates[i] > 0.0 && rates[i] <= 1.0)) throw ParameterError("ber schedule: rates must lie in (0, 1]");
        if (i > 0 && !(rates[i] > rates[i - 1])) {
            throw ParameterError("ber schedule: rates must be strictly increasing");
        }
    }
}

BerSchedule BerSchedule::geometric(double first, std::size_t n, double factor) {
    if (!(factor > 1.0)) throw ParameterError("ber schedule: factor must be > 1");
    BerSchedule s;
    for (std::size_t i = 0; i < n; ++i) {
        // 1e-6 * 10 is not 1e-5 in binary; keep the decimal the user meant.
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.15g", first * std::pow(factor, static_cast<double>(i)));
        s.rates.push_back(std::strtod(buf, nullptr));
    }
    s.validate();
    return s;
}

SnnModel inject_model(const SnnModel& model, const DramContext& dram, double rate, std::uint64_t seed) {
    SnnModel out = model;
    if (rate == 0.0) return out;
    const MappingPlan plan = plan_baseline(model.weights.size(), dram.geom);
    const WeakCellMap map = generate_map(dram.model, rate, dram.geom, derive_seed(seed, "map"), dram.params);
    const StoredImage stored = store(model.weights, plan);
    StoredImage faulty{stored.word_addresses, inject(stored.image, map, plan, derive_seed(seed, "flips"))};
    out.weights = load(faulty, plan);
    return out;
}

std::optional<std::size_t> select_ber_threshold(std::span<const double> accuracies, double acc_model0,
                                                double acc_bound) {
    std::optional<std::size_t> th;
    for (std::size_t i = 0; i < accuracies.size(); ++i) {
        if (accuracies[i] >= acc_model0 - acc_bound) th = i;
    }
    return th;
}

SearchOutcome fault_aware_search(LearningBackend& backend, const BerSchedule& schedule, double acc_model0,
                                 double acc_bound) {
    schedule.validate();
    SearchOutcome out;
    for (std::size_t i = 0; i < schedule.rates.size(); ++i) {
        backend.inject(schedule.rates[i], i);
        backend.train(i);
        const double acc = backend.evaluate(i);
        out.accuracies.push_back(acc);
        if (acc >= acc_model0 - acc_bound) {
            out.threshold_index = i;
            backend.record(i);
        }
    }
    return out;
}

namespace {

class SnnBackend final : public LearningBackend {
  public:
    SnnBackend(const SnnModel& model_0, const DramContext& dram, const Dataset& train, const Dataset& test,
               const FaultTrainingOptions& opt)
        : working_(model_0), dram_(dram), train_(train), test_(test), opt_(opt) {}

    void inject(double rate, std::size_t index) override {
        working_ = inject_model(working_, dram_, rate, derive_seed(opt_.seed, "harden-inject", index));
    }
    void train(std::size_t index) override {
        for (std::size_t e = 0; e < opt_.n_epoch; ++e) {
            train_epoch(working_, train_, derive_seed(opt_.seed, "harden-train", index * opt_.n_epoch + e));
        }
        assign_labels(working_, train_, derive_seed(opt_.seed, "harden-label", index), opt_.jobs);
    }
    double evaluate(std::size_t) override {
        last_acc_ = 100.0 * infer(working_, test_, opt_.eval_seed, opt_.jobs);
        return last_acc_;
    }
    void record(std::size_t) override {
        best_ = working_;
        best_acc_ = last_acc_;
    }

    std::optional<SnnModel> best_;
    std::optional<double> best_acc_;

  private:
    SnnModel working_;
    const DramContext& dram_;
    const Dataset& train_;
    const Dataset& test_;
    FaultTrainingOptions opt_;
    double last_acc_ = 0.0;
};

}  // namespace

ResilienceResult fault_aware_train(const SnnModel& model_0, double acc_model0, const BerSchedule& schedule,
                                   const DramContext& dram, const Dataset& train, const Dataset& test,
                                   const FaultTrainingOptions& options) {
    schedule.validate();
    if (train.empty() || test.empty()) throw ParameterError("fault-aware training: empty dataset");
    SnnBackend backend(model_0, dram, train, test, options);
    const SearchOutcome search = fault_aware_search(backend, schedule, acc_model0, options.acc_bound);

    ResilienceResult r;
    r.rates = schedule.rates;
    r.improved_curve = search.accuracies;
    r.acc_model0 = acc_model0;
    if (search.threshold_index) {
        r.ber_th = schedule.rates[*search.threshold_index];
        r.acc_model1 = backend.best_acc_;
        r.model_1 = std::move(backend.best_);
    }
    return r;
}

ToleranceCurve tolerance_curve(const SnnModel& model, std::span<const double> rates, const DramContext& dram,
                               const Dataset& test, std::span<const std::uint64_t> seeds,
                               std::uint64_t eval_seed, unsigned jobs) {
    if (seeds.empty()) throw ParameterError("tolerance curve: no seeds");
    ToleranceCurve c;
    c.rates.assign(rates.begin(), rates.end());
    for (std::size_t i = 0; i < rates.size(); ++i) {
        if (!(rates[i] >= 0.0 && rates[i] <= 1.0)) throw ParameterError("tolerance curve: rate outside [0, 1]");
        std::vector<double> accs;
        double sum = 0.0;
        for (std::uint64_t s : seeds) {
            const SnnModel faulty = inject_model(model, dram, rates[i], derive_seed(s, "curve", i));
            accs.push_back(100.0 * infer(faulty, test, eval_seed, jobs));
            sum += accs.back();
        }
        c.mean.push_back(sum / static_cast<double>(seeds.size()));
        c.per_seed.push_back(std::move(accs));
    }
    return c;
}

// ---------------------------------------------------------------------------

namespace {
using nlohmann::json;

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }
}  // namespace

void write_resilience_json(std::ostream& os, const ResilienceResult& r) {
    json j;
    j["rates"] = r.rates;
    j["baseline_curve"] = r.baseline_curve;
    j["improved_curve"] = r.improved_curve;
    j["ber_th"] = opt_json(r.ber_th);
    j["acc_model0"] = r.acc_model0;
    j["acc_model1"] = opt_json(r.acc_model1);
    os << j.dump(2) << '\n';
    if (!os) throw IoError("resilience: write failed");
}

ResilienceResult read_resilience_json(std::istream& is) {
    try {
        json j;
        is >> j;
        ResilienceResult r;
        r.rates = j.at("rates").get<std::vector<double>>();
        r.baseline_curve = j.value("baseline_curve", std::vector<double>{});
        r.improved_curve = j.at("improved_curve").get<std::vector<double>>();
        if (!j.at("ber_th").is_null()) r.ber_th = j["ber_th"].get<double>();
        r.acc_model0 = j.at("acc_model0").get<double>();
        if (j.contains("acc_model1") && !j["acc_model1"].is_null()) r.acc_model1 = j["acc_model1"].get<double>();
        return r;
    } catch (const json::exception& e) {
        throw IoError(std::string("resilience: ") + e.what());
    }
}

}  // namespace axdram
