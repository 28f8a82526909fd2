#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "scengen/marginal.hpp"
#include "scengen/panel.hpp"

namespace scengen {

using MarginalMap = std::map<std::string, MarginalModel, std::less<>>;

/// Standard-normal image of a HistoricalPanel; NaN where the source is missing.
struct NormalPanel {
    std::vector<StationMeta> stations;
    std::vector<Timestamp> index;
    Eigen::MatrixXd z;  // time x station

    std::size_t rows() const { return index.size(); }
    std::size_t cols() const { return stations.size(); }
};

/// z = Phi^-1(F(x)) elementwise.
NormalPanel forward(const HistoricalPanel& panel, const MarginalMap& marginals);

/// x = F^-1(Phi(z)) elementwise.
HistoricalPanel inverse(const NormalPanel& z_panel, const MarginalMap& marginals,
                        Resolution resolution = Resolution::Monthly);

double to_normal(const MarginalModel& marginal, double x);
double from_normal(const MarginalModel& marginal, double z);

/// One marginal per station in panel order; throws ConfigurationError for a missing one.
std::vector<const MarginalModel*> marginals_for(const std::vector<StationMeta>& stations,
                                                const MarginalMap& marginals);

}  // namespace scengen
