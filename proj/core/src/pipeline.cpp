#include "axdram/pipeline.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <ctime>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "axdram/energy.hpp"
#include "axdram/errors.hpp"
#include "axdram/resilience.hpp"
#include "axdram/seeding.hpp"
#include "text_util.hpp"

namespace axdram {

namespace fs = std::filesystem;
using nlohmann::json;
using detail::format_double;

std::string_view tool_version() noexcept { return "0.1.0"; }

std::string_view to_string(Stage s) noexcept {
    switch (s) {
        case Stage::Train: return "train";
        case Stage::SweepBer: return "sweep-ber";
        case Stage::Map: return "map";
        case Stage::Energy: return "energy";
        case Stage::Report: return "report";
    }
    return "?";
}

std::optional<Stage> parse_stage(std::string_view s) noexcept {
    for (Stage st : {Stage::Train, Stage::SweepBer, Stage::Map, Stage::Energy, Stage::Report})
        if (to_string(st) == s) return st;
    return std::nullopt;
}

std::string network_dir(std::size_t n) { return "N" + std::to_string(n); }
std::string voltage_dir(double v) { return "v" + format_double(v); }

namespace {

// Seed names; the derivation is derive_seed(config.seed, name, index).
std::uint64_t seed_for(const ExperimentConfig& c, std::string_view name, std::uint64_t index = 0) {
    return derive_seed(c.seed, name, index);
}
std::uint64_t voltage_key(double v) { return std::bit_cast<std::uint64_t>(v); }

std::vector<std::uint64_t> curve_seeds(const ExperimentConfig& c, std::size_t n) {
    std::vector<std::uint64_t> out;
    for (std::size_t k = 0; k < c.training.curve_seeds; ++k) out.push_back(derive_seed(seed_for(c, "curve", n), "k", k));
    return out;
}

class Context {
  public:
    Context(const ExperimentConfig& config, const RunOptions& options)
        : cfg(config), opt(options), out(options.out.empty() ? config.output_dir : options.out) {}

    const ExperimentConfig& cfg;
    const RunOptions& opt;
    fs::path out;

    void log(const std::string& msg) const {
        if (opt.log) opt.log(msg);
    }

    const std::pair<Dataset, Dataset>& data() {
        if (!data_) data_ = load_datasets(cfg);
        return *data_;
    }

    SnnParams params_for(std::size_t n) const {
        SnnParams p = cfg.snn;
        p.n_exc = n;
        return p;
    }

    DramContext dram() const { return DramContext{cfg.geometry, cfg.error_model, cfg.error_params}; }

    fs::path net(std::size_t n) const { return out / network_dir(n); }
    fs::path cell(std::size_t n, double v) const { return net(n) / voltage_dir(v); }

  private:
    std::optional<std::pair<Dataset, Dataset>> data_;
};

void write_text(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot write " + path.string());
    os << text;
    if (!os) throw IoError("write failed: " + path.string());
}

std::ifstream open_in(const fs::path& path, const char* needed_by) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("missing " + path.string() + " (run the " + needed_by + " stage first)");
    }
    return in;
}

json read_json(const fs::path& path, const char* needed_by) {
    auto in = open_in(path, needed_by);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

SnnModel read_model(const fs::path& path, const char* needed_by) {
    auto in = open_in(path, needed_by);
    return read_model_json(in);
}

void save_model(const fs::path& path, const SnnModel& model) {
    std::ostringstream os;
    write_model_json(os, model);
    write_text(path, os.str());
}

// ---------------------------------------------------------------------------

void stage_train(Context& ctx) {
    const auto& [train, test] = ctx.data();
    for (std::size_t n : ctx.cfg.network_sizes) {
        ctx.log("train: N" + std::to_string(n) + " on " + std::to_string(train.size()) + " samples");
        SnnModel model = SnnModel::initialize(ctx.params_for(n), seed_for(ctx.cfg, "init", n));
        const std::uint64_t train_seed = seed_for(ctx.cfg, "train", n);
        for (std::size_t e = 0; e < ctx.cfg.training.baseline_epochs; ++e) {
            train_epoch(model, train, derive_seed(train_seed, "epoch", e));
        }
        assign_labels(model, train, seed_for(ctx.cfg, "label", n), ctx.opt.jobs);
        const double acc = 100.0 * infer(model, test, seed_for(ctx.cfg, "eval"), ctx.opt.jobs);
        ctx.log("train: N" + std::to_string(n) + " clean accuracy " + format_double(acc) + "%");
        save_model(ctx.net(n) / "model0.json", model);
        const json j{{"network", n},
                     {"acc_model0", acc},
                     {"train_samples", train.size()},
                     {"test_samples", test.size()}};
        write_text(ctx.net(n) / "baseline.json", j.dump(2) + "\n");
    }
}

void stage_sweep(Context& ctx) {
    const auto& [train, test] = ctx.data();
    for (std::size_t n : ctx.cfg.network_sizes) {
        const SnnModel model0 = read_model(ctx.net(n) / "model0.json", "train");
        const double acc0 = read_json(ctx.net(n) / "baseline.json", "train").at("acc_model0").get<double>();
        ctx.log("sweep-ber: N" + std::to_string(n) + " hardening over " +
                std::to_string(ctx.cfg.schedule.rates.size()) + " rates");
        FaultTrainingOptions o;
        o.n_epoch = ctx.cfg.training.n_epoch;
        o.acc_bound = ctx.cfg.training.acc_bound;
        o.seed = seed_for(ctx.cfg, "harden", n);
        o.eval_seed = seed_for(ctx.cfg, "eval");
        o.jobs = ctx.opt.jobs;
        ResilienceResult r = fault_aware_train(model0, acc0, ctx.cfg.schedule, ctx.dram(), train, test, o);

        const auto seeds = curve_seeds(ctx.cfg, n);
        r.baseline_curve =
            tolerance_curve(model0, r.rates, ctx.dram(), test, seeds, o.eval_seed, ctx.opt.jobs).mean;
        std::vector<double> hardened;
        if (r.model_1) {
            hardened = tolerance_curve(*r.model_1, r.rates, ctx.dram(), test, seeds, o.eval_seed, ctx.opt.jobs).mean;
            save_model(ctx.net(n) / "model1.json", *r.model_1);
        } else {
            std::error_code ec;
            fs::remove(ctx.net(n) / "model1.json", ec);
        }
        ctx.log("sweep-ber: N" + std::to_string(n) + " BER_th " + (r.ber_th ? format_double(*r.ber_th) : "none"));

        std::ostringstream os;
        write_resilience_json(os, r);
        write_text(ctx.net(n) / "resilience.json", os.str());

        std::ostringstream csv;
        csv << "rate,baseline_pct,improved_pct,hardened_pct\n";
        for (std::size_t i = 0; i < r.rates.size(); ++i) {
            csv << format_double(r.rates[i]) << ',' << format_double(r.baseline_curve[i]) << ','
                << format_double(r.improved_curve[i]) << ','
                << (hardened.empty() ? std::string() : format_double(hardened[i])) << '\n';
        }
        write_text(ctx.net(n) / "curves.csv", csv.str());
    }
}

std::optional<double> read_ber_th(const Context& ctx, std::size_t n) {
    const json j = read_json(ctx.net(n) / "resilience.json", "sweep-ber");
    if (j.at("ber_th").is_null()) return std::nullopt;
    return j["ber_th"].get<double>();
}

WeakCellMap device_map(const ExperimentConfig& c, double v) {
    const BerProfile profile(c.ber_profile);
    return generate_map(c.error_model, profile.ber_at(v), c.geometry, seed_for(c, "device", voltage_key(v)),
                        c.error_params);
}

void stage_map(Context& ctx) {
    const bool want_base = !ctx.opt.flavor || *ctx.opt.flavor == MappingFlavor::Baseline;
    const bool want_safe = !ctx.opt.flavor || *ctx.opt.flavor == MappingFlavor::SafeSubarray;
    const BerProfile profile(ctx.cfg.ber_profile);
    for (std::size_t n : ctx.cfg.network_sizes) {
        const std::size_t n_weights = ctx.opt.n_weights.value_or(n * ctx.cfg.snn.n_in);
        const bool standalone = ctx.opt.n_weights.has_value();
        std::optional<double> ber_th;
        if (want_safe) ber_th = read_ber_th(ctx, n);
        std::optional<SnnModel> deployed;
        if (!standalone) {
            const fs::path m1 = ctx.net(n) / "model1.json";
            deployed = read_model(fs::exists(m1) ? m1 : ctx.net(n) / "model0.json", "train");
        }
        for (double v : ctx.cfg.voltages) {
            const fs::path dir = ctx.cell(n, v);
            ctx.log("map: N" + std::to_string(n) + " at " + format_double(v) + " V");
            json dep{{"network", n}, {"voltage", v}, {"ber", profile.ber_at(v)}};
            const WeakCellMap map = device_map(ctx.cfg, v);
            std::vector<std::pair<MappingFlavor, MappingPlan>> plans;
            if (want_base) plans.emplace_back(MappingFlavor::Baseline, plan_baseline(n_weights, ctx.cfg.geometry));
            if (want_safe) {
                const SubarrayRates rates = subarray_rates(map);
                const double th = ber_th.value_or(0.0);
                plans.emplace_back(MappingFlavor::SafeSubarray,
                                   plan_safe_subarray(n_weights, ctx.cfg.geometry, rates, th));
                std::ostringstream sub;
                sub << "subarray,rate,safe\n";
                std::size_t safe = 0;
                for (std::size_t i = 0; i < rates.size(); ++i) {
                    const bool ok = rates.values()[i] <= th;
                    safe += ok ? 1 : 0;
                    sub << i << ',' << format_double(rates.values()[i]) << ',' << (ok ? 1 : 0) << '\n';
                }
                write_text(dir / "subarrays.csv", sub.str());
                dep["ber_th"] = ber_th ? json(*ber_th) : json(nullptr);
                dep["safe_subarrays"] = safe;
                dep["subarrays"] = rates.size();
            }
            for (const auto& [flavor, plan] : plans) {
                std::ostringstream os;
                write_plan_csv(os, plan);
                write_text(dir / ("plan_" + std::string(to_string(flavor)) + ".csv"), os.str());
                if (deployed) {
                    SnnModel faulty = *deployed;
                    const StoredImage stored = store(deployed->weights, plan);
                    const StoredImage read_back{
                        stored.word_addresses,
                        inject(stored.image, map, plan, seed_for(ctx.cfg, "deploy", voltage_key(v)))};
                    faulty.weights = load(read_back, plan);
                    const double acc = 100.0 * infer(faulty, ctx.data().second, seed_for(ctx.cfg, "eval"), ctx.opt.jobs);
                    dep["accuracy_pct"][std::string(to_string(flavor))] = acc;
                }
            }
            if (!standalone) write_text(dir / "deployed.json", dep.dump(2) + "\n");
        }
    }
}

MappingPlan read_plan(const fs::path& path, const ExperimentConfig& c, MappingFlavor flavor) {
    auto in = open_in(path, "map");
    return read_plan_csv(in, c.geometry, flavor);
}

void stage_energy(Context& ctx) {
    const auto& c = ctx.cfg;
    const BerProfile profile(c.ber_profile);
    const auto op_nom = VoltageOperatingPoint::make(kNominalVoltage, c.array_model, profile, c.calibration,
                                                    c.clock.t_ck_ns);
    const CycleTiming t_nom = cycle_timing(op_nom.timing, c.clock);
    for (std::size_t n : c.network_sizes) {
        const std::string workload = network_dir(n);
        const std::string ref_name = "baseline@" + format_double(kNominalVoltage);
        std::optional<EnergyReport> base_nom;
        std::optional<EnergyReport> safe_nom;
        for (double v : c.voltages) {
            const fs::path dir = ctx.cell(n, v);
            ctx.log("energy: N" + std::to_string(n) + " at " + format_double(v) + " V");
            const auto op = VoltageOperatingPoint::make(v, c.array_model, profile, c.calibration, c.clock.t_ck_ns);
            const CycleTiming t_v = cycle_timing(op.timing, c.clock);

            const MappingPlan base_plan = read_plan(dir / "plan_baseline.csv", c, MappingFlavor::Baseline);
            if (!base_nom) {
                base_nom = energy_of(trace_inference(base_plan, t_nom, c.burst_banks), c.energy_table, op_nom,
                                     workload, c.clock, c.burst_banks);
            }
            const AccessTrace base_trace = trace_inference(base_plan, t_v, c.burst_banks);
            EnergyReport base_v = energy_of(base_trace, c.energy_table, op, workload, c.clock, c.burst_banks);
            base_v.speedup = speedup(base_v, *base_nom);
            base_v.reference = ref_name;
            std::vector<EnergyRow> rows{make_row(base_v, workload, "baseline", *base_nom)};
            std::vector<std::pair<std::string, const AccessTrace*>> traces{{"baseline", &base_trace}};

            const fs::path safe_path = dir / "plan_safe-subarray.csv";
            std::optional<AccessTrace> safe_trace;
            if (fs::exists(safe_path)) {
                const MappingPlan safe_plan = read_plan(safe_path, c, MappingFlavor::SafeSubarray);
                if (!safe_nom) {
                    const json res = read_json(ctx.net(n) / "resilience.json", "sweep-ber");
                    const double th = res.at("ber_th").is_null() ? 0.0 : res["ber_th"].get<double>();
                    const MappingPlan nominal_plan = plan_safe_subarray(
                        safe_plan.size(), c.geometry, SubarrayRates::uniform(c.geometry, 0.0), th);
                    safe_nom = energy_of(trace_inference(nominal_plan, t_nom, c.burst_banks), c.energy_table,
                                         op_nom, workload, c.clock, c.burst_banks);
                }
                safe_trace = trace_inference(safe_plan, t_v, c.burst_banks);
                EnergyReport safe_v = energy_of(*safe_trace, c.energy_table, op, workload, c.clock, c.burst_banks);
                safe_v.speedup = speedup(safe_v, *base_nom);
                safe_v.reference = ref_name;
                rows.push_back(make_row(safe_v, workload, "safe-subarray", *base_nom));
                traces.emplace_back("safe-subarray", &*safe_trace);

                std::ostringstream rep;
                write_report_json(rep, safe_v);
                write_text(dir / "report_safe-subarray.json", rep.str());

                std::ostringstream sum;
                sum << "network,voltage,ber,per_access_saving_pct,saving_same_plan_pct,saving_vs_baseline_pct,"
                       "speedup_same_voltage,speedup_vs_baseline_nominal,hits,misses,conflicts,cycles\n";
                sum << workload << ',' << format_double(v) << ',' << format_double(op.ber) << ','
                    << format_double(100.0 * (1.0 - op.energy_scale)) << ','
                    << format_double(saving_pct(safe_v, *safe_nom)) << ','
                    << format_double(saving_pct(safe_v, *base_nom)) << ',' << format_double(speedup(safe_v, base_v))
                    << ',' << format_double(speedup(safe_v, *base_nom)) << ',' << safe_v.counts.hits << ','
                    << safe_v.counts.misses << ',' << safe_v.counts.conflicts << ',' << safe_v.cycles << '\n';
                write_text(dir / "summary.csv", sum.str());
            }
            std::ostringstream rep;
            write_report_json(rep, base_v);
            write_text(dir / "report_baseline.json", rep.str());

            std::ostringstream csv;
            write_energy_csv(csv, rows);
            write_text(dir / "energy.csv", csv.str());

            if (c.write_traces) {
                for (const auto& [name, trace] : traces) {
                    std::ostringstream os;
                    write_trace_csv(os, *trace);
                    write_text(dir / ("trace_" + name + ".csv"), os.str());
                }
            }
        }
    }
}

std::string read_all(const fs::path& path, const char* needed_by) {
    auto in = open_in(path, needed_by);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Concatenates CSVs that share a header line.
void append_csv(std::string& acc, const std::string& text, const std::string& prefix_header = {},
                const std::string& prefix = {}) {
    const auto nl = text.find('\n');
    if (nl == std::string::npos) return;
    if (acc.empty()) acc = prefix_header + text.substr(0, nl + 1);
    std::istringstream rest(text.substr(nl + 1));
    std::string line;
    while (std::getline(rest, line)) {
        if (!line.empty()) acc += prefix + line + '\n';
    }
}

void stage_report(Context& ctx) {
    std::string table;
    std::string savings;
    std::string accuracy;
    std::string deployment = "network,voltage,ber,flavor,accuracy_pct\n";
    for (std::size_t n : ctx.cfg.network_sizes) {
        const std::string net = network_dir(n);
        const fs::path curves = ctx.net(n) / "curves.csv";
        if (fs::exists(curves)) append_csv(accuracy, read_all(curves, "sweep-ber"), "network,", net + ",");
        for (double v : ctx.cfg.voltages) {
            const fs::path dir = ctx.cell(n, v);
            append_csv(table, read_all(dir / "energy.csv", "energy"));
            if (fs::exists(dir / "summary.csv")) append_csv(savings, read_all(dir / "summary.csv", "energy"));
            if (fs::exists(dir / "deployed.json")) {
                const json d = read_json(dir / "deployed.json", "map");
                if (d.contains("accuracy_pct")) {
                    for (const auto& [flavor, acc] : d["accuracy_pct"].items()) {
                        deployment += net + ',' + format_double(v) + ',' + format_double(d["ber"].get<double>()) +
                                      ',' + flavor + ',' + format_double(acc.get<double>()) + '\n';
                    }
                }
            }
        }
    }
    write_text(ctx.out / "energy_table.csv", table);
    if (!savings.empty()) write_text(ctx.out / "savings.csv", savings);
    if (!accuracy.empty()) write_text(ctx.out / "accuracy.csv", accuracy);
    write_text(ctx.out / "deployment.csv", deployment);
}

std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

RunManifest finish(const Context& ctx) {
    RunManifest m;
    m.config_hash = config_hash(ctx.cfg);
    m.tool_version = std::string(tool_version());
    m.master_seed = ctx.cfg.seed;
    m.seeds = stage_seeds(ctx.cfg);
    for (const auto& entry : fs::recursive_directory_iterator(ctx.out)) {
        if (!entry.is_regular_file()) continue;
        const std::string rel = fs::relative(entry.path(), ctx.out).generic_string();
        if (rel == "manifest.json" || rel == "timestamps.txt") continue;
        m.artifacts.push_back(rel);
    }
    std::sort(m.artifacts.begin(), m.artifacts.end());

    json j;
    j["config_hash"] = m.config_hash;
    j["tool_version"] = m.tool_version;
    j["master_seed"] = m.master_seed;
    j["seeds"] = json::object();
    for (const auto& [name, s] : m.seeds) j["seeds"][name] = s;
    j["artifacts"] = m.artifacts;
    j["config"] = json::parse(to_json(ctx.cfg));
    j["config"].erase("output_dir");
    write_text(ctx.out / "manifest.json", j.dump(2) + "\n");
    return m;
}

}  // namespace

std::vector<std::pair<std::string, std::uint64_t>> stage_seeds(const ExperimentConfig& c) {
    std::vector<std::pair<std::string, std::uint64_t>> s{{"eval", seed_for(c, "eval")}};
    for (std::size_t n : c.network_sizes) {
        const std::string net = network_dir(n);
        s.emplace_back(net + "/init", seed_for(c, "init", n));
        s.emplace_back(net + "/train", seed_for(c, "train", n));
        s.emplace_back(net + "/label", seed_for(c, "label", n));
        s.emplace_back(net + "/harden", seed_for(c, "harden", n));
        const auto cs = curve_seeds(c, n);
        for (std::size_t k = 0; k < cs.size(); ++k) s.emplace_back(net + "/curve/" + std::to_string(k), cs[k]);
    }
    for (double v : c.voltages) {
        s.emplace_back(voltage_dir(v) + "/device", seed_for(c, "device", voltage_key(v)));
        s.emplace_back(voltage_dir(v) + "/deploy", seed_for(c, "deploy", voltage_key(v)));
    }
    std::sort(s.begin(), s.end());
    return s;
}

RunManifest run_stage(Stage stage, const ExperimentConfig& config, const RunOptions& options) {
    config.validate();
    Context ctx(config, options);
    fs::create_directories(ctx.out);
    const std::string started = utc_now();
    switch (stage) {
        case Stage::Train: stage_train(ctx); break;
        case Stage::SweepBer: stage_sweep(ctx); break;
        case Stage::Map: stage_map(ctx); break;
        case Stage::Energy: stage_energy(ctx); break;
        case Stage::Report: stage_report(ctx); break;
    }
    {
        std::ofstream ts(ctx.out / "timestamps.txt", std::ios::app);
        ts << to_string(stage) << ' ' << started << ' ' << utc_now() << '\n';
    }
    return finish(ctx);
}

RunManifest run_experiment(const ExperimentConfig& config, const RunOptions& options) {
    RunManifest m;
    for (Stage s : {Stage::Train, Stage::SweepBer, Stage::Map, Stage::Energy, Stage::Report}) {
        m = run_stage(s, config, options);
    }
    return m;
}

}  // namespace axdram
