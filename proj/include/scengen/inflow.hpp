#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "scengen/panel.hpp"
#include "scengen/simulate.hpp"

namespace scengen {

/// Log-space parameters of one calendar month.
struct InflowMonth {
    double log_mean = 0.0;
    double log_std = 1.0;
    std::vector<double> phi;       // lag 1..p coefficients on the month-standardized series
    double innovation_std = 1.0;  // residual std of the AR regression

    bool operator==(const InflowMonth&) const = default;
};

struct InflowStation {
    StationMeta station;
    double zero_floor = 0.0;  // substituted for zero inflows before taking logs
    std::array<InflowMonth, 12> months;

    bool operator==(const InflowStation&) const = default;
};

/// Periodic log-normal AR(p) model, one independent recursion per station.
struct InflowModel {
    int order = 1;
    bool pooled = false;
    std::vector<InflowStation> stations;
};

struct InflowOptions {
    int order = 1;
    /// One set of AR coefficients shared by all months instead of one per month.
    bool pooled = false;
};

/// Fits per-month log mean/std and AR(p) coefficients by least squares on the
/// month-standardized log series. Zeros are replaced by half the smallest positive
/// value; coefficient sets whose absolute sum reaches 1 are shrunk to 0.99.
InflowModel fit_inflow_ar(const HistoricalPanel& monthly_volume, const InflowOptions& options = {});

/// Runs the recursion with Gaussian innovations (120-month burn-in) over a
/// consecutive monthly horizon and exponentiates.
ScenarioSet generate_inflows(const InflowModel& model, std::size_t n_scenarios, const std::vector<Timestamp>& horizon,
                             std::uint64_t seed);

}  // namespace scengen
