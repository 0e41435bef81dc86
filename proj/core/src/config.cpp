#include "axdram/config.hpp"

#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>
#include <type_traits>

#include "axdram/errors.hpp"
#include "axdram/seeding.hpp"

namespace axdram {

namespace {

std::string join_violations(const std::vector<std::string>& v) {
    std::string msg = "invalid configuration (" + std::to_string(v.size()) + " problem" +
                      (v.size() == 1 ? "" : "s") + "):";
    for (const auto& s : v) msg += "\n  - " + s;
    return msg;
}

}  // namespace

ValidationError::ValidationError(std::vector<std::string> violations)
    : ParameterError(join_violations(violations)), violations_(std::move(violations)) {}

namespace {

using nlohmann::json;

class Reader {
  public:
    explicit Reader(std::vector<std::string>& errors) : errors_(errors) {}

    template <class T>
    void get(const json& obj, const char* key, T& out, const std::string& where) {
        const auto it = obj.find(key);
        if (it == obj.end()) return;
        const std::string name = where.empty() ? key : where + "." + key;
        if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
            if (!it->is_number_unsigned()) {
                errors_.push_back(name + ": expected a non-negative integer");
                return;
            }
        }
        try {
            out = it->get<T>();
        } catch (const json::exception&) {
            errors_.push_back(name + ": wrong type");
        }
    }

    /// Reports keys of `obj` outside `known`. Returns false when obj is not an object.
    bool object(const json& obj, std::initializer_list<const char*> known, const std::string& where) {
        if (!obj.is_object()) {
            errors_.push_back((where.empty() ? std::string("config") : where) + ": expected an object");
            return false;
        }
        for (const auto& [key, value] : obj.items()) {
            bool found = false;
            for (const char* k : known) found = found || key == k;
            if (!found) errors_.push_back((where.empty() ? key : where + "." + key) + ": unknown key");
        }
        return true;
    }

    void error(std::string msg) { errors_.push_back(std::move(msg)); }

  private:
    std::vector<std::string>& errors_;
};

void read_pairs(Reader& r, const json& j, const char* key, std::vector<std::pair<double, double>>& out) {
    const auto it = j.find(key);
    if (it == j.end()) return;
    if (!it->is_array()) {
        r.error(std::string(key) + ": expected an array of [x, y] pairs");
        return;
    }
    std::vector<std::pair<double, double>> pairs;
    for (const auto& p : *it) {
        if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
            r.error(std::string(key) + ": every entry must be a [number, number] pair");
            return;
        }
        pairs.emplace_back(p[0].get<double>(), p[1].get<double>());
    }
    out = std::move(pairs);
}

void read_snn(Reader& r, const json& j, SnnParams& p) {
    const std::string w = "snn";
    if (!r.object(j, {"n_in", "dt_ms", "duration_ms", "max_rate_hz", "v_rest", "v_reset", "v_th", "tau_mem_ms",
                      "tau_syn_ms", "refractory_ms", "inhibition_mv", "theta_plus_mv", "tau_theta_ms", "w_max",
                      "init_w_max", "norm_per_input", "tau_pre_ms", "tau_post_ms", "eta_pre", "eta_post",
                      "x_target", "min_spikes", "max_boosts", "boost_hz"},
                  w)) {
        return;
    }
    r.get(j, "n_in", p.n_in, w);
    r.get(j, "dt_ms", p.dt_ms, w);
    r.get(j, "duration_ms", p.duration_ms, w);
    r.get(j, "max_rate_hz", p.max_rate_hz, w);
    r.get(j, "v_rest", p.v_rest, w);
    r.get(j, "v_reset", p.v_reset, w);
    r.get(j, "v_th", p.v_th, w);
    r.get(j, "tau_mem_ms", p.tau_mem_ms, w);
    r.get(j, "tau_syn_ms", p.tau_syn_ms, w);
    r.get(j, "refractory_ms", p.refractory_ms, w);
    r.get(j, "inhibition_mv", p.inhibition_mv, w);
    r.get(j, "theta_plus_mv", p.theta_plus_mv, w);
    r.get(j, "tau_theta_ms", p.tau_theta_ms, w);
    r.get(j, "w_max", p.w_max, w);
    r.get(j, "init_w_max", p.init_w_max, w);
    r.get(j, "norm_per_input", p.norm_per_input, w);
    r.get(j, "tau_pre_ms", p.tau_pre_ms, w);
    r.get(j, "tau_post_ms", p.tau_post_ms, w);
    r.get(j, "eta_pre", p.eta_pre, w);
    r.get(j, "eta_post", p.eta_post, w);
    r.get(j, "x_target", p.x_target, w);
    r.get(j, "min_spikes", p.min_spikes, w);
    r.get(j, "max_boosts", p.max_boosts, w);
    r.get(j, "boost_hz", p.boost_hz, w);
}

json snn_json(const SnnParams& p) {
    return json{{"n_in", p.n_in},
                {"dt_ms", p.dt_ms},
                {"duration_ms", p.duration_ms},
                {"max_rate_hz", p.max_rate_hz},
                {"v_rest", p.v_rest},
                {"v_reset", p.v_reset},
                {"v_th", p.v_th},
                {"tau_mem_ms", p.tau_mem_ms},
                {"tau_syn_ms", p.tau_syn_ms},
                {"refractory_ms", p.refractory_ms},
                {"inhibition_mv", p.inhibition_mv},
                {"theta_plus_mv", p.theta_plus_mv},
                {"tau_theta_ms", p.tau_theta_ms},
                {"w_max", p.w_max},
                {"init_w_max", p.init_w_max},
                {"norm_per_input", p.norm_per_input},
                {"tau_pre_ms", p.tau_pre_ms},
                {"tau_post_ms", p.tau_post_ms},
                {"eta_pre", p.eta_pre},
                {"eta_post", p.eta_post},
                {"x_target", p.x_target},
                {"min_spikes", p.min_spikes},
                {"max_boosts", p.max_boosts},
                {"boost_hz", p.boost_hz}};
}

template <class Fn>
void capture(std::vector<std::string>& out, const std::string& where, Fn&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        out.push_back(where + ": " + e.what());
    }
}

}  // namespace

std::vector<std::string> ExperimentConfig::violations() const {
    std::vector<std::string> v;
    capture(v, "geometry", [&] { geometry.validate(); });
    if (geometry.word_bits != 32) v.push_back("geometry.word_bits: must be 32 (one FP32 weight per word)");
    if (!(clock.t_ck_ns > 0.0)) v.push_back("clock.t_ck_ns: must be > 0");
    if (clock.cl_cycles == 0 || clock.burst_cycles == 0) v.push_back("clock: cl_cycles and burst_cycles must be >= 1");
    if (burst_banks == 0) v.push_back("burst_banks: must be >= 1");

    if (voltages.empty()) v.push_back("voltages: at least one voltage is required");
    for (double x : voltages) {
        if (!(x >= kMinVoltage && x <= kNominalVoltage)) {
            v.push_back("voltages: " + std::to_string(x) + " V is outside the characterized range [1.025, 1.35] V");
        }
    }
    capture(v, "ber_profile", [&] {
        const BerProfile profile(ber_profile);
        for (double x : voltages) {
            if (x >= kMinVoltage && x <= kNominalVoltage) profile.ber_at(x);
        }
    });
    capture(v, "array_model", [&] { array_model.validate(); });
    for (const auto& [x, pp] : calibration.offsets_pp) {
        if (!std::isfinite(x) || !std::isfinite(pp)) v.push_back("energy_calibration: entries must be finite");
    }
    capture(v, "energy_table", [&] { energy_table.validate(); });
    if (!(error_params.p_fault > 0.0 && error_params.p_fault <= 1.0)) v.push_back("error_model.p_fault: must lie in (0, 1]");
    if (error_model == ErrorModelKind::M3 &&
        !(error_params.p_one >= 0.0 && error_params.p_one <= 1.0 && error_params.p_zero >= 0.0 &&
          error_params.p_zero <= 1.0 && error_params.p_one + error_params.p_zero > 0.0)) {
        v.push_back("error_model: M3 needs p_one and p_zero in [0, 1], not both zero");
    }
    capture(v, "schedule", [&] { schedule.validate(); });
    capture(v, "snn", [&] { snn.validate(); });

    if (training.baseline_epochs == 0) v.push_back("training.baseline_epochs: must be >= 1");
    if (training.n_epoch == 0) v.push_back("training.n_epoch: must be >= 1");
    if (!(training.acc_bound >= 0.0)) v.push_back("training.acc_bound: must be >= 0");
    if (training.curve_seeds == 0) v.push_back("training.curve_seeds: must be >= 1");

    if (network_sizes.empty()) v.push_back("network_sizes: at least one size is required");
    std::set<std::size_t> seen;
    for (std::size_t n : network_sizes) {
        if (n == 0) v.push_back("network_sizes: sizes must be >= 1");
        if (!seen.insert(n).second) v.push_back("network_sizes: duplicate size " + std::to_string(n));
        if (geometry.n_ch > 0 && geometry.n_ra > 0 && geometry.n_cp > 0 && geometry.n_ba > 0 && geometry.n_su > 0 &&
            geometry.n_ro > 0 && geometry.n_co > 0 && n * snn.n_in > geometry.capacity_words()) {
            v.push_back("network_sizes: N" + std::to_string(n) + " needs " + std::to_string(n * snn.n_in) +
                        " words, geometry holds " + std::to_string(geometry.capacity_words()));
        }
    }

    if (dataset.format == "idx") {
        if (dataset.train_images.empty() || dataset.train_labels.empty() || dataset.test_images.empty() ||
            dataset.test_labels.empty()) {
            v.push_back("dataset: idx format needs train_images, train_labels, test_images and test_labels");
        }
    } else if (dataset.format == "csv") {
        if (dataset.train_csv.empty() || dataset.test_csv.empty()) {
            v.push_back("dataset: csv format needs train_csv and test_csv");
        }
    } else {
        v.push_back("dataset.format: must be \"idx\" or \"csv\"");
    }
    if (output_dir.empty()) v.push_back("output_dir: must not be empty");
    return v;
}

void ExperimentConfig::validate() const {
    auto v = violations();
    if (!v.empty()) throw ValidationError(std::move(v));
}

std::filesystem::path ExperimentConfig::resolve(const std::filesystem::path& p) const {
    return p.is_absolute() ? p : base_dir / p;
}

ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError({std::string("config is not valid JSON: ") + e.what()});
    }
    ExperimentConfig c;
    c.base_dir = base_dir;
    std::vector<std::string> errors;
    Reader r(errors);
    if (!r.object(j, {"geometry", "clock", "burst_banks", "voltages", "ber_profile", "array_model",
                      "energy_calibration", "energy_table", "error_model", "schedule", "snn", "dataset", "training",
                      "network_sizes", "seed", "output_dir", "write_traces"},
                  "")) {
        throw ValidationError(std::move(errors));
    }

    if (auto it = j.find("geometry"); it != j.end() &&
        r.object(*it, {"n_ch", "n_ra", "n_cp", "n_ba", "n_su", "n_ro", "n_co", "word_bits"}, "geometry")) {
        auto& g = c.geometry;
        r.get(*it, "n_ch", g.n_ch, "geometry");
        r.get(*it, "n_ra", g.n_ra, "geometry");
        r.get(*it, "n_cp", g.n_cp, "geometry");
        r.get(*it, "n_ba", g.n_ba, "geometry");
        r.get(*it, "n_su", g.n_su, "geometry");
        r.get(*it, "n_ro", g.n_ro, "geometry");
        r.get(*it, "n_co", g.n_co, "geometry");
        r.get(*it, "word_bits", g.word_bits, "geometry");
    }
    if (auto it = j.find("clock"); it != j.end() && r.object(*it, {"t_ck_ns", "cl_cycles", "burst_cycles"}, "clock")) {
        r.get(*it, "t_ck_ns", c.clock.t_ck_ns, "clock");
        r.get(*it, "cl_cycles", c.clock.cl_cycles, "clock");
        r.get(*it, "burst_cycles", c.clock.burst_cycles, "clock");
    }
    r.get(j, "burst_banks", c.burst_banks, "");
    r.get(j, "voltages", c.voltages, "");
    read_pairs(r, j, "ber_profile", c.ber_profile);
    if (auto it = j.find("array_model");
        it != j.end() && r.object(*it, {"tau_nominal_ns", "tau_exponent"}, "array_model")) {
        r.get(*it, "tau_nominal_ns", c.array_model.tau_nominal_ns, "array_model");
        r.get(*it, "tau_exponent", c.array_model.tau_exponent, "array_model");
    }
    read_pairs(r, j, "energy_calibration", c.calibration.offsets_pp);
    if (auto it = j.find("energy_table");
        it != j.end() && r.object(*it, {"e_act", "e_rd", "e_wr", "e_pre"}, "energy_table")) {
        r.get(*it, "e_act", c.energy_table.e_act, "energy_table");
        r.get(*it, "e_rd", c.energy_table.e_rd, "energy_table");
        r.get(*it, "e_wr", c.energy_table.e_wr, "energy_table");
        r.get(*it, "e_pre", c.energy_table.e_pre, "energy_table");
    }
    if (auto it = j.find("error_model");
        it != j.end() && r.object(*it, {"kind", "p_fault", "p_one", "p_zero"}, "error_model")) {
        std::string kind = std::string(to_string(c.error_model));
        r.get(*it, "kind", kind, "error_model");
        if (auto k = parse_error_model(kind)) {
            c.error_model = *k;
        } else {
            r.error("error_model.kind: unknown model '" + kind + "'");
        }
        r.get(*it, "p_fault", c.error_params.p_fault, "error_model");
        r.get(*it, "p_one", c.error_params.p_one, "error_model");
        r.get(*it, "p_zero", c.error_params.p_zero, "error_model");
    }
    if (auto it = j.find("schedule");
        it != j.end() && r.object(*it, {"rates", "first", "count", "factor"}, "schedule")) {
        if (it->contains("rates")) {
            r.get(*it, "rates", c.schedule.rates, "schedule");
        } else if (it->contains("first")) {
            double first = 0.0;
            double factor = 10.0;
            std::size_t count = 0;
            r.get(*it, "first", first, "schedule");
            r.get(*it, "count", count, "schedule");
            r.get(*it, "factor", factor, "schedule");
            c.schedule.rates.clear();
            try {
                c.schedule = BerSchedule::geometric(first, count, factor);
            } catch (const Error& e) {
                r.error(std::string("schedule: ") + e.what());
            }
        }
    }
    if (auto it = j.find("snn"); it != j.end()) read_snn(r, *it, c.snn);
    if (auto it = j.find("dataset");
        it != j.end() && r.object(*it, {"format", "train_images", "train_labels", "test_images", "test_labels",
                                        "train_csv", "test_csv", "train_limit", "test_limit"},
                                  "dataset")) {
        auto& d = c.dataset;
        auto path = [&](const char* key, std::filesystem::path& out) {
            std::string s;
            r.get(*it, key, s, "dataset");
            if (!s.empty()) out = s;
        };
        r.get(*it, "format", d.format, "dataset");
        path("train_images", d.train_images);
        path("train_labels", d.train_labels);
        path("test_images", d.test_images);
        path("test_labels", d.test_labels);
        path("train_csv", d.train_csv);
        path("test_csv", d.test_csv);
        r.get(*it, "train_limit", d.train_limit, "dataset");
        r.get(*it, "test_limit", d.test_limit, "dataset");
    }
    if (auto it = j.find("training");
        it != j.end() && r.object(*it, {"baseline_epochs", "n_epoch", "acc_bound", "curve_seeds"}, "training")) {
        r.get(*it, "baseline_epochs", c.training.baseline_epochs, "training");
        r.get(*it, "n_epoch", c.training.n_epoch, "training");
        r.get(*it, "acc_bound", c.training.acc_bound, "training");
        r.get(*it, "curve_seeds", c.training.curve_seeds, "training");
    }
    r.get(j, "network_sizes", c.network_sizes, "");
    r.get(j, "seed", c.seed, "");
    {
        std::string out = c.output_dir.string();
        r.get(j, "output_dir", out, "");
        c.output_dir = out;
    }
    r.get(j, "write_traces", c.write_traces, "");

    auto rest = c.violations();
    errors.insert(errors.end(), rest.begin(), rest.end());
    if (!errors.empty()) throw ValidationError(std::move(errors));
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("config: cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

std::string to_json(const ExperimentConfig& c) {
    const auto& g = c.geometry;
    json j;
    j["geometry"] = {{"n_ch", g.n_ch}, {"n_ra", g.n_ra}, {"n_cp", g.n_cp}, {"n_ba", g.n_ba},
                     {"n_su", g.n_su}, {"n_ro", g.n_ro}, {"n_co", g.n_co}, {"word_bits", g.word_bits}};
    j["clock"] = {{"t_ck_ns", c.clock.t_ck_ns}, {"cl_cycles", c.clock.cl_cycles},
                  {"burst_cycles", c.clock.burst_cycles}};
    j["burst_banks"] = c.burst_banks;
    j["voltages"] = c.voltages;
    j["ber_profile"] = c.ber_profile;
    j["array_model"] = {{"tau_nominal_ns", c.array_model.tau_nominal_ns},
                        {"tau_exponent", c.array_model.tau_exponent}};
    j["energy_calibration"] = c.calibration.offsets_pp;
    j["energy_table"] = {{"e_act", c.energy_table.e_act}, {"e_rd", c.energy_table.e_rd},
                         {"e_wr", c.energy_table.e_wr}, {"e_pre", c.energy_table.e_pre}};
    j["error_model"] = {{"kind", std::string(to_string(c.error_model))}, {"p_fault", c.error_params.p_fault},
                        {"p_one", c.error_params.p_one}, {"p_zero", c.error_params.p_zero}};
    j["schedule"] = {{"rates", c.schedule.rates}};
    j["snn"] = snn_json(c.snn);
    const auto& d = c.dataset;
    j["dataset"] = {{"format", d.format},
                    {"train_images", d.train_images.generic_string()},
                    {"train_labels", d.train_labels.generic_string()},
                    {"test_images", d.test_images.generic_string()},
                    {"test_labels", d.test_labels.generic_string()},
                    {"train_csv", d.train_csv.generic_string()},
                    {"test_csv", d.test_csv.generic_string()},
                    {"train_limit", d.train_limit},
                    {"test_limit", d.test_limit}};
    j["training"] = {{"baseline_epochs", c.training.baseline_epochs}, {"n_epoch", c.training.n_epoch},
                     {"acc_bound", c.training.acc_bound}, {"curve_seeds", c.training.curve_seeds}};
    j["network_sizes"] = c.network_sizes;
    j["seed"] = c.seed;
    j["output_dir"] = c.output_dir.generic_string();
    j["write_traces"] = c.write_traces;
    return j.dump(2);
}

std::string config_hash(const ExperimentConfig& c) {
    ExperimentConfig copy = c;
    copy.output_dir = "out";
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(to_json(copy))));
    return buf;
}

std::pair<Dataset, Dataset> load_datasets(const ExperimentConfig& c) {
    const auto& d = c.dataset;
    auto need = [&](const std::filesystem::path& p) {
        const auto full = c.resolve(p);
        if (!std::filesystem::exists(full)) throw IoError("dataset file not found: " + full.string());
        return full;
    };
    Dataset train;
    Dataset test;
    if (d.format == "csv") {
        train = load_csv(need(d.train_csv));
        test = load_csv(need(d.test_csv));
    } else {
        train = load_idx(need(d.train_images), need(d.train_labels));
        test = load_idx(need(d.test_images), need(d.test_labels));
    }
    if (d.train_limit > 0) train = train.slice(0, d.train_limit);
    if (d.test_limit > 0) test = test.slice(0, d.test_limit);
    if (train.empty() || test.empty()) throw IoError("dataset: train or test set is empty");
    if (train.n_pixels != c.snn.n_in || test.n_pixels != c.snn.n_in) {
        throw IoError("dataset: images have " + std::to_string(train.n_pixels) + " pixels but snn.n_in is " +
                      std::to_string(c.snn.n_in));
    }
    return {std::move(train), std::move(test)};
}

}  // namespace axdram
