#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "axdram/dataset.hpp"
#include "axdram/dram.hpp"
#include "axdram/energy.hpp"
#include "axdram/error_model.hpp"
#include "axdram/resilience.hpp"
#include "axdram/snn.hpp"
#include "axdram/voltage.hpp"

namespace axdram {

struct DatasetConfig {
    std::string format = "idx"; ///< "idx" or "csv"
    std::filesystem::path train_images;
    std::filesystem::path train_labels;
    std::filesystem::path test_images;
    std::filesystem::path test_labels;
    std::filesystem::path train_csv;
    std::filesystem::path test_csv;
    std::size_t train_limit = 0; ///< 0 keeps every sample
    std::size_t test_limit = 0;
};

struct TrainingConfig {
    std::size_t baseline_epochs = 3;
    std::size_t n_epoch = 1;
    double acc_bound = 1.0; ///< percentage points
    std::size_t curve_seeds = 3;
};

struct ExperimentConfig {
    DramGeometry geometry{1, 1, 1, 8, 16, 64, 128, 32};
    DeviceClock clock;
    std::uint32_t burst_banks = 4;
    std::vector<double> voltages{1.325, 1.25, 1.175, 1.1, 1.025};
    std::vector<std::pair<double, double>> ber_profile = BerProfile::illustrative().points();
    ArrayVoltageModel array_model;
    EnergyCalibration calibration;
    AccessEnergyTable energy_table;
    ErrorModelKind error_model = ErrorModelKind::M0;
    ErrorModelParams error_params;
    BerSchedule schedule = BerSchedule{{1e-6, 1e-5, 1e-4, 1e-3}};
    SnnParams snn;
    DatasetConfig dataset;
    TrainingConfig training;
    std::vector<std::size_t> network_sizes{100};
    std::uint64_t seed = 1;
    std::filesystem::path output_dir = "out";
    bool write_traces = false;

    /// Directory that relative dataset paths are resolved against.
    std::filesystem::path base_dir = ".";

    /// Every rule the config breaks; empty when valid.
    std::vector<std::string> violations() const;
    /// Throws ValidationError listing all violations.
    void validate() const;

    std::filesystem::path resolve(const std::filesystem::path& p) const;
};

/// Parses JSON text. Missing keys keep their defaults; unknown keys,
/// wrong types and rule violations are all reported in one ValidationError.
ExperimentConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir = ".");
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical JSON (sorted keys, no base_dir).
std::string to_json(const ExperimentConfig& config);

/// fnv1a64 of the canonical JSON, 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

/// Train and test sets named by the config, after the sample limits.
/// Throws IoError when files are missing.
std::pair<Dataset, Dataset> load_datasets(const ExperimentConfig& config);

}  // namespace axdram
