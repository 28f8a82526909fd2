#include "scengen/transform.hpp"

#include <cmath>

#include "scengen/error.hpp"
#include "scengen/normal.hpp"

namespace scengen {

double to_normal(const MarginalModel& marginal, double x) {
    if (std::isnan(x)) return x;
    return normal_quantile(marginal.cdf(x));
}

double from_normal(const MarginalModel& marginal, double z) {
    if (std::isnan(z)) return z;
    return marginal.quantile(normal_cdf(z));
}

std::vector<const MarginalModel*> marginals_for(const std::vector<StationMeta>& stations,
                                                const MarginalMap& marginals) {
    std::vector<const MarginalModel*> out;
    out.reserve(stations.size());
    for (const auto& s : stations) {
        auto it = marginals.find(s.id);
        if (it == marginals.end()) throw ConfigurationError("no marginal model for station '" + s.id + "'");
        out.push_back(&it->second);
    }
    return out;
}

NormalPanel forward(const HistoricalPanel& panel, const MarginalMap& marginals) {
    const auto models = marginals_for(panel.stations(), marginals);
    const auto& x = panel.values();
    Eigen::MatrixXd z(x.rows(), x.cols());
    const Eigen::Index n_rows = x.rows(), n_cols = x.cols();

#pragma omp parallel for collapse(2) schedule(static)
    for (Eigen::Index c = 0; c < n_cols; ++c)
        for (Eigen::Index r = 0; r < n_rows; ++r) z(r, c) = to_normal(*models[static_cast<std::size_t>(c)], x(r, c));

    return {panel.stations(), panel.index(), std::move(z)};
}

HistoricalPanel inverse(const NormalPanel& z_panel, const MarginalMap& marginals, Resolution resolution) {
    const auto models = marginals_for(z_panel.stations, marginals);
    const auto& z = z_panel.z;
    Eigen::MatrixXd x(z.rows(), z.cols());
    const Eigen::Index n_rows = z.rows(), n_cols = z.cols();

#pragma omp parallel for collapse(2) schedule(static)
    for (Eigen::Index c = 0; c < n_cols; ++c)
        for (Eigen::Index r = 0; r < n_rows; ++r)
            x(r, c) = from_normal(*models[static_cast<std::size_t>(c)], z(r, c));

    return {z_panel.stations, z_panel.index, std::move(x), resolution};
}

}  // namespace scengen
