#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "scengen/panel.hpp"
#include "scengen/simulate.hpp"

namespace scengen {

struct FisherResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

/// Equality test for two independent correlations:
///   T = (atanh r1 - atanh r2) / sqrt(1/(n1-3) + 1/(n2-3)),
/// with a two-sided p-value from the standard normal.
FisherResult fisher_z_pair(double r1, long n1, double r2, long n2);

/// Pairwise-complete Pearson correlations. `r` is NaN for pairs with fewer than
/// 4 overlapping rows or a constant column; `n` holds the overlap counts.
struct CorrelationMatrix {
    Eigen::MatrixXd r;
    Eigen::MatrixXi n;
};

CorrelationMatrix correlation_matrix(const Eigen::MatrixXd& data, bool parallel = true);
CorrelationMatrix correlation_matrix(const HistoricalPanel& panel);
/// Rows of all scenarios pooled.
CorrelationMatrix correlation_matrix(const ScenarioSet& set);

/// Scenario rows stacked into one (scenarios * time) x station matrix.
Eigen::MatrixXd pooled_rows(const ScenarioSet& set);

/// Kolmogorov-Smirnov distance between two samples.
double ks_two_sample(std::vector<double> a, std::vector<double> b);
/// KS distance between a sample and a continuous CDF.
double ks_one_sample(std::vector<double> sample, const std::function<double(double)>& cdf);
/// Asymptotic one-sample critical value at level alpha (Kolmogorov distribution).
double ks_critical(std::size_t n, double alpha = 0.05);

struct PairTest {
    std::string station_a;
    std::string station_b;
    double r_hist = 0.0;
    double r_synth = 0.0;
    long n_hist = 0;
    long n_synth = 0;
    double statistic = 0.0;
    double p_value = 1.0;
    bool pass = false;
};

struct Band {
    std::string station;
    int month = 1;
    double hist_mean = 0.0, hist_lo = 0.0, hist_hi = 0.0;
    double synth_mean = 0.0, synth_lo = 0.0, synth_hi = 0.0;
};

struct ValidationReport {
    double alpha = 0.10;
    double band_level = 0.90;
    /// Hydro-VRE and VRE-VRE pairs; these define pass_fraction.
    std::vector<PairTest> pair_tests;
    /// Hydro-hydro pairs belong to the inflow model and are reported on their own.
    std::vector<PairTest> hydro_pairs;
    std::vector<std::pair<std::string, std::string>> untestable;
    double pass_fraction = 0.0;
    double hydro_pass_fraction = 0.0;
    double mean_abs_corr_diff = 0.0;
    std::vector<std::pair<std::string, double>> pdf_distances;
    std::vector<Band> bands;
};

struct ReportOptions {
    double alpha = 0.10;
    double band_level = 0.90;
};

/// Compares a monthly historical panel with monthly synthetic scenarios over
/// their common stations.
ValidationReport build_report(const HistoricalPanel& historical, const ScenarioSet& synthetic,
                              const ReportOptions& options = {});

nlohmann::json to_json(const ValidationReport& report);

/// report.json, fisher_hist.csv, corr_scatter.csv and bands.csv in `dir`.
void write_report(const ValidationReport& report, const std::filesystem::path& dir);

/// Empirical quantile with linear interpolation between order statistics.
double empirical_quantile(std::vector<double> values, double p);

}  // namespace scengen
