#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "scengen/archive.hpp"
#include "scengen/config.hpp"
#include "scengen/validate.hpp"

namespace scengen {

/// Historical inputs of a run: the monthly panel the network is fitted on and,
/// when the data file is hourly, the hourly generation history.
struct RunData {
    HistoricalPanel monthly;
    std::shared_ptr<const HistoricalPanel> hourly;  // capacity-factor stations only; may be null
    std::filesystem::path hourly_source;
};

RunData load_run_data(const RunConfig& config);

/// Support used for a station's KDE: [0, 1] for capacity factors, [0, inf) for volumes.
Interval support_for(const StationMeta& station);

/// One KDE per station; stations without variance get a constant marginal.
MarginalMap fit_marginals(const HistoricalPanel& monthly, std::size_t grid_size);

/// Aggregate, fit marginals, learn the structure, fit regressions, then the
/// inflow model (evidence stations) and the disaggregation model (hourly data).
ModelArchive fit_model(const RunConfig& config, const RunData& data);
ModelArchive fit_model(const RunConfig& config);

struct SimulationOutput {
    ScenarioSet monthly;
    std::optional<DisaggResult> hourly;
};

/// Evidence comes from `evidence` when given, otherwise from the inflow model
/// when the configuration asks for it.
SimulationOutput run_simulation(const RunConfig& config, const ModelArchive& model,
                                const ScenarioSet* evidence = nullptr);

/// Writes scenarios_monthly.csv and, with hourly output, scenarios_hourly.csv,
/// provenance.csv and clipping.csv.
void write_simulation(const SimulationOutput& output, const std::filesystem::path& dir);

ValidationReport run_validation(const RunConfig& config, const ModelArchive& model,
                                const std::filesystem::path& scenario_dir);

/// manifest_<command>.json recording the command, config hash, seed, thread count and artifact versions.
void write_manifest(const std::filesystem::path& dir, const std::string& command, const RunConfig& config,
                    const std::vector<std::filesystem::path>& artifacts);

}  // namespace scengen
