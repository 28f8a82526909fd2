#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "scengen/calendar.hpp"

namespace scengen {

enum class StationKind { Hydro, Wind, Csp, Dgsp, SmallHydro, Other };

/// Hydro inflows are volumes; every other kind is generation normalized to a capacity factor.
enum class Unit { CapacityFactor, Volume };

std::string_view to_string(StationKind kind);
std::optional<StationKind> parse_station_kind(std::string_view text);

struct StationMeta {
    std::string id;
    StationKind kind = StationKind::Other;
    double capacity = 0.0;  // MW
    bool is_evidence = false;

    Unit unit() const { return kind == StationKind::Hydro ? Unit::Volume : Unit::CapacityFactor; }
    bool operator==(const StationMeta&) const = default;
};

/// Aligned multi-station series. Values are stored in model units (capacity
/// factor or volume) with NaN marking timestamps outside a station's coverage.
///
/// Construction validates every invariant; a panel is immutable afterwards.
class HistoricalPanel {
public:
    HistoricalPanel(std::vector<StationMeta> stations, std::vector<Timestamp> index,
                    Eigen::MatrixXd values, Resolution resolution);

    const std::vector<StationMeta>& stations() const noexcept { return stations_; }
    const std::vector<Timestamp>& index() const noexcept { return index_; }
    const Eigen::MatrixXd& values() const noexcept { return values_; }
    Resolution resolution() const noexcept { return resolution_; }

    std::size_t rows() const noexcept { return index_.size(); }
    std::size_t cols() const noexcept { return stations_.size(); }

    std::optional<std::size_t> find(std::string_view station_id) const;
    std::size_t at(std::string_view station_id) const;  // throws ArgumentError

    /// Non-missing values of one column, in time order.
    std::vector<double> observed(std::size_t col) const;

    /// Column subset in the requested order.
    HistoricalPanel select(const std::vector<std::string>& ids) const;

private:
    std::vector<StationMeta> stations_;
    std::vector<Timestamp> index_;
    Eigen::MatrixXd values_;
    Resolution resolution_;
};

std::vector<StationMeta> load_metadata(const std::filesystem::path& path);
void write_metadata(const std::vector<StationMeta>& stations, const std::filesystem::path& path);

/// Reads a long-format data CSV (`timestamp,station_id,value`). Only stations that
/// appear in the data file enter the panel, in metadata order. Generation series
/// are divided by capacity. The resolution is inferred unless given.
HistoricalPanel load_panel(const std::filesystem::path& data_path,
                           const std::filesystem::path& meta_path,
                           std::optional<Resolution> resolution = std::nullopt);

HistoricalPanel load_panel(const std::filesystem::path& data_path,
                           const std::vector<StationMeta>& meta,
                           std::optional<Resolution> resolution = std::nullopt);

/// Writes observed cells back in raw units (capacity factors times capacity).
void write_panel(const HistoricalPanel& panel, const std::filesystem::path& path);

/// Monthly means of an hourly panel. A station's month is kept only if every
/// hour of that civil month is observed.
HistoricalPanel aggregate_to_monthly(const HistoricalPanel& hourly);

/// Column union of two panels with the same resolution and disjoint stations.
HistoricalPanel merge_panels(const HistoricalPanel& a, const HistoricalPanel& b);

}  // namespace scengen
