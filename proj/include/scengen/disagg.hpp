#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "scengen/panel.hpp"
#include "scengen/simulate.hpp"

namespace scengen {

/// PCA of one calendar month's station-wise capacity factors across historical years.
struct DisaggMonth {
    std::vector<int> years;        // ascending; each has a complete month for every station
    Eigen::VectorXd means;         // per-station mean over years
    Eigen::MatrixXd loadings;      // stations x retained, orthonormal columns
    Eigen::MatrixXd projections;   // years x retained
    Eigen::MatrixXd cf;            // years x stations, historical monthly means
    double retained_fraction = 1.0;
};

/// Decomposition matrices plus the hourly history the profiles are cut from.
struct DisaggModel {
    std::vector<StationMeta> stations;
    double variance_threshold = 0.95;
    std::array<DisaggMonth, 12> months;
    std::shared_ptr<const HistoricalPanel> hourly;

    /// Historical hourly values of (year, month, station).
    std::span<const double> profile(int year, int month, std::size_t station) const;
};

struct DisaggOptions {
    double variance_threshold = 0.95;
};

/// Requires at least 3 complete historical years for every calendar month.
DisaggModel fit_disagg(std::shared_ptr<const HistoricalPanel> hourly, const DisaggOptions& options = {});

/// Projects centred station vectors onto the leading components reaching
/// `threshold` of the variance. Returns the loadings; fills `retained_fraction`.
Eigen::MatrixXd principal_loadings(const Eigen::MatrixXd& centred, double threshold, double& retained_fraction);

struct ProvenanceRecord {
    std::size_t scenario;  // 0-based
    Timestamp month;
    int selected_year;
};

struct ClippingRecord {
    std::size_t scenario;
    Timestamp month;
    std::size_t station;
    std::size_t clipped_hours;
    double relative_deviation;  // (hourly mean - target) / target; 0 when nothing clipped
};

struct DisaggResult {
    ScenarioSet hourly;
    std::vector<ProvenanceRecord> provenance;  // one per (scenario, month)
    std::vector<ClippingRecord> clipping;      // one per (scenario, month, station)
};

/// Joint profile selection: per (scenario, month) the historical year nearest in
/// PC space, then every station's hours rescaled to the target monthly mean and
/// clipped to [0, 1].
DisaggResult disaggregate(const ScenarioSet& monthly, const DisaggModel& model, bool parallel = true);

/// Historical year index (into DisaggMonth::years) nearest to a station vector.
std::size_t nearest_year(const DisaggMonth& month, const Eigen::VectorXd& station_cf);

void write_provenance(const DisaggResult& result, const std::filesystem::path& path);
void write_clipping(const DisaggResult& result, const std::filesystem::path& path);

}  // namespace scengen
