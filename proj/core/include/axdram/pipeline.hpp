#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "axdram/config.hpp"
#include "axdram/weight_storage.hpp"

namespace axdram {

std::string_view tool_version() noexcept;

enum class Stage : std::uint8_t { Train, SweepBer, Map, Energy, Report };

std::string_view to_string(Stage stage) noexcept;
std::optional<Stage> parse_stage(std::string_view s) noexcept;

struct RunOptions {
    std::filesystem::path out; ///< empty: config.output_dir
    unsigned jobs = 1;
    std::function<void(std::string_view)> log;

    // map stage only
    std::optional<MappingFlavor> flavor;   ///< write just this plan
    std::optional<std::size_t> n_weights;  ///< plan this many words instead of the network's
};

struct RunManifest {
    std::string config_hash;
    std::string tool_version;
    std::uint64_t master_seed = 0;
    std::vector<std::pair<std::string, std::uint64_t>> seeds;
    std::vector<std::string> artifacts; ///< relative to the output directory, sorted
};

/// Output layout, relative to the output directory:
///   N<n>/model0.json baseline.json              train
///   N<n>/resilience.json model1.json curves.csv sweep-ber
///   N<n>/v<V>/plan_*.csv subarrays.csv deployed.json   map
///   N<n>/v<V>/energy.csv summary.csv report_*.json     energy
///   energy_table.csv savings.csv accuracy.csv deployment.csv  report
/// Each stage reads only files written by earlier stages and ends by
/// rewriting manifest.json; wall-clock times go to timestamps.txt.
RunManifest run_stage(Stage stage, const ExperimentConfig& config, const RunOptions& options);

/// All stages in order.
RunManifest run_experiment(const ExperimentConfig& config, const RunOptions& options);

/// Named seeds every stage derives from config.seed.
std::vector<std::pair<std::string, std::uint64_t>> stage_seeds(const ExperimentConfig& config);

std::string network_dir(std::size_t n_exc);
std::string voltage_dir(double v_supply);

}  // namespace axdram
