#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "scengen/bnet.hpp"
#include "scengen/calendar.hpp"
#include "scengen/panel.hpp"

namespace scengen {

/// Generated scenarios in original units: one (time x station) matrix per scenario.
struct ScenarioSet {
    std::vector<StationMeta> stations;
    std::vector<Timestamp> index;
    Resolution resolution = Resolution::Monthly;
    std::vector<Eigen::MatrixXd> values;
    std::uint64_t seed = 0;

    std::size_t scenario_count() const { return values.size(); }
    std::optional<std::size_t> find(std::string_view station_id) const;
};

/// Normal-space samples, same layout as ScenarioSet, stations in DAG order.
struct ZSamples {
    std::vector<StationMeta> stations;
    std::vector<Timestamp> index;
    std::vector<Eigen::MatrixXd> z;
};

/// Ancestral sampling of the network: every node visited in topological order,
///   q_i = sum_j a_ij q_j + eps_i,
/// with eps_i bootstrapped from the node's residuals. Evidence nodes take the
/// forward transform of `evidence` when it is given. Draws are counter-based on
/// (seed, scenario, month, node), so scenarios are independent of scheduling.
ZSamples sample_network(const BayesNet& net, std::size_t n_scenarios, const std::vector<Timestamp>& horizon,
                        const ScenarioSet* evidence, std::uint64_t seed, bool parallel = true);

/// Inverse transform per station. Evidence stations copy `evidence` verbatim when given.
ScenarioSet to_original(const ZSamples& samples, const BayesNet& net, const ScenarioSet* evidence = nullptr,
                        bool parallel = true);

/// sample_network followed by to_original.
ScenarioSet simulate(const BayesNet& net, std::size_t n_scenarios, const std::vector<Timestamp>& horizon,
                     const ScenarioSet* evidence, std::uint64_t seed);

/// `scenario,timestamp,station_id,value` with 1-based scenario numbers.
void write_scenarios(const ScenarioSet& set, const std::filesystem::path& path);

/// Reads a scenario CSV. Stations come out in metadata order; absent cells are NaN.
ScenarioSet read_scenarios(const std::filesystem::path& path, const std::vector<StationMeta>& meta,
                           Resolution resolution);

/// Column subset of a scenario set.
ScenarioSet select(const ScenarioSet& set, const std::vector<std::string>& ids);

}  // namespace scengen
