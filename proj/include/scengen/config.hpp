#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "scengen/calendar.hpp"

namespace scengen {

enum class InflowSource {
    Ar,       // periodic log-normal AR(p), one independent recursion per station
    Network,  // evidence stations sampled by the network like every other node
};

struct ModelConfig {
    std::size_t max_parents = 6;
    int restarts = 5;
    std::size_t kde_grid_size = 2048;
    double pca_variance_threshold = 0.95;
    int ar_order = 1;
    bool ar_pooled = false;
};

struct SimulationConfig {
    std::size_t n_scenarios = 100;
    YearMonth horizon_start{2020, 1};
    int horizon_months = 12;
    std::uint64_t seed = 42;
    InflowSource inflow_source = InflowSource::Ar;
};

struct ValidationConfig {
    double alpha = 0.10;
    double band_level = 0.90;
};

/// Declarative run configuration. Relative paths are resolved against the
/// directory of the configuration file.
struct RunConfig {
    std::filesystem::path data;                        // hourly or monthly long-format CSV
    std::optional<std::filesystem::path> inflow_data;  // monthly hydro volumes, optional
    std::filesystem::path metadata;
    std::filesystem::path output_dir;
    ModelConfig model;
    SimulationConfig simulation;
    ValidationConfig validation;

    std::filesystem::path archive_path() const { return output_dir / "model.json"; }
};

/// Throws ConfigurationError on unknown keys, wrong types or out-of-range values.
RunConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

nlohmann::json to_json(const RunConfig& config);

/// FNV-1a over the canonical JSON form.
std::string config_hash(const RunConfig& config);

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL);
std::uint64_t file_fingerprint(const std::filesystem::path& path);

}  // namespace scengen
