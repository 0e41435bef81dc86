#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <fstream>
#include <iostream>

#include "axdram/config.hpp"
#include "axdram/energy.hpp"
#include "axdram/errors.hpp"
#include "axdram/pipeline.hpp"

namespace {

void setup_logging() {
    auto logger = spdlog::stderr_color_mt("axdram");
    logger->set_pattern("[%H:%M:%S] %^%l%$ %v");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::info);
    if (const char* env = std::getenv("SPARKXD_LOG")) {
        const auto level = spdlog::level::from_str(env);
        if (level == spdlog::level::off && std::string_view(env) != "off") {
            spdlog::warn("SPARKXD_LOG={} is not a log level, keeping info", env);
        } else {
            spdlog::set_level(level);
        }
    }
}

// Re-prices an exported trace at one voltage.
int price_trace(const axdram::ExperimentConfig& cfg, const std::string& trace_path, double voltage,
                const std::string& workload, const std::filesystem::path& out) {
    using namespace axdram;
    check_voltage(voltage);
    std::ifstream in(trace_path);
    if (!in) throw IoError("cannot open trace " + trace_path);
    const AccessTrace trace = read_trace_csv(in, cfg.geometry);
    const auto op = VoltageOperatingPoint::make(voltage, cfg.array_model, BerProfile(cfg.ber_profile),
                                                cfg.calibration, cfg.clock.t_ck_ns);
    const EnergyReport report = energy_of(trace, cfg.energy_table, op, workload, cfg.clock, cfg.burst_banks);
    std::filesystem::create_directories(out);
    std::ofstream os(out / "report.json", std::ios::binary | std::ios::trunc);
    write_report_json(os, report);
    spdlog::info("{} accesses, {} pJ, {} cycles -> {}", report.counts.total(), report.total_pj, report.cycles,
                 (out / "report.json").string());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    setup_logging();

    CLI::App app{"Approximate-DRAM experiments for spiking neural networks"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(axdram::tool_version()));

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    unsigned jobs = 1;
    app.add_option("--config", config_path, "Experiment configuration (JSON)")->required()->check(CLI::ExistingFile);
    app.add_option("--seed", seed, "Master seed, overrides the config");
    app.add_option("--out", out_dir, "Output directory, overrides the config");
    app.add_option("--jobs", jobs, "Worker threads for inference")->check(CLI::PositiveNumber);

    auto* run = app.add_subcommand("run", "All stages in order");
    auto* train = app.add_subcommand("train", "Train and label the baseline networks");
    auto* sweep = app.add_subcommand("sweep-ber", "Fault-aware training and tolerance curves");
    auto* map = app.add_subcommand("map", "Weight mapping plans per voltage");
    auto* energy = app.add_subcommand("energy", "Access traces and energy reports");
    auto* report = app.add_subcommand("report", "Aggregate per-cell results into tables");
    for (auto* sub : {run, train, sweep, map, energy, report}) sub->fallthrough();

    std::string flavor_name;
    std::optional<std::size_t> n_weights;
    map->add_option("--flavor", flavor_name, "baseline or safe-subarray (default: both)")
        ->check(CLI::IsMember({"baseline", "safe-subarray"}));
    map->add_option("--weights", n_weights, "Plan this many words instead of a trained network");

    std::string trace_path;
    double trace_voltage = axdram::kNominalVoltage;
    std::string workload;
    energy->add_option("--trace", trace_path, "Price an exported trace CSV instead of running the stage")
        ->check(CLI::ExistingFile);
    energy->add_option("--voltage", trace_voltage, "Supply voltage for --trace");
    energy->add_option("--workload", workload, "Workload label for --trace");

    CLI11_PARSE(app, argc, argv);

    try {
        axdram::ExperimentConfig cfg = axdram::load_config(config_path);
        if (seed) cfg.seed = *seed;
        axdram::RunOptions opt;
        opt.out = out_dir.empty() ? cfg.output_dir : std::filesystem::path(out_dir);
        opt.jobs = jobs;
        opt.log = [](std::string_view msg) { spdlog::info("{}", msg); };
        if (!flavor_name.empty()) opt.flavor = axdram::parse_flavor(flavor_name);
        opt.n_weights = n_weights;

        spdlog::debug("config hash {}", axdram::config_hash(cfg));
        axdram::RunManifest manifest;
        if (*run) {
            manifest = axdram::run_experiment(cfg, opt);
        } else if (*energy && !trace_path.empty()) {
            return price_trace(cfg, trace_path, trace_voltage, workload, opt.out);
        } else {
            for (auto* sub : app.get_subcommands()) {
                manifest = axdram::run_stage(*axdram::parse_stage(sub->get_name()), cfg, opt);
            }
        }
        spdlog::info("{} artifacts under {}", manifest.artifacts.size(), opt.out.string());
        return 0;
    } catch (const axdram::ValidationError& e) {
        spdlog::error("{}", e.what());
        return 2;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 1;
    }
}
