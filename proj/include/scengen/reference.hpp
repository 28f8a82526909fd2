#pragma once

// Straightforward single-threaded versions of the parallel kernels. They are
// slow on purpose and exist as cross-checks for tests and as the baseline of
// the benchmark.

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "scengen/disagg.hpp"
#include "scengen/simulate.hpp"
#include "scengen/transform.hpp"

namespace scengen::reference {

/// Groups hours by civil month with a running sum per (month, station).
Eigen::MatrixXd aggregate_to_monthly(const HistoricalPanel& hourly);

Eigen::MatrixXd forward(const HistoricalPanel& panel, const MarginalMap& marginals);
Eigen::MatrixXd inverse(const NormalPanel& z, const MarginalMap& marginals);

/// Two-pass pairwise-complete Pearson correlation, NaN where undefined.
Eigen::MatrixXd correlation(const Eigen::MatrixXd& data);

/// Ancestral sampling without evidence, same draws as sample_network.
std::vector<Eigen::MatrixXd> sample(const BayesNet& net, std::size_t n_scenarios, std::size_t horizon,
                                    std::uint64_t seed);

/// Nearest historical year by exhaustive scan of squared distances in PC space.
std::size_t nearest_year(const DisaggMonth& month, const Eigen::VectorXd& station_cf);

/// Hourly values of every scenario, one (scenario, month) pair at a time.
std::vector<Eigen::MatrixXd> disaggregate(const ScenarioSet& monthly, const DisaggModel& model);

}  // namespace scengen::reference
