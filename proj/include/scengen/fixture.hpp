#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Dense>

#include "scengen/panel.hpp"

namespace scengen {

/// Ground-truth marginal of one synthetic station: Beta(a, b) capacity factors
/// for generation, lognormal(mu, sigma) volumes for hydro.
struct FixtureMarginal {
    double a = 0.0, b = 0.0;
    double mu = 0.0, sigma = 0.0;
};

struct FixtureOptions {
    std::size_t n_hydro = 3;
    std::size_t n_vre = 5;
    int years = 30;
    int start_year = 1990;
    std::size_t factors = 2;
    std::uint64_t seed = 42;
};

/// Monthly data drawn i.i.d. from a known Gaussian copula (a factor-model
/// correlation matrix) with known marginals.
struct CopulaFixture {
    std::vector<StationMeta> stations;
    std::vector<FixtureMarginal> marginals;
    Eigen::MatrixXd correlation;  // true latent correlation
    Eigen::MatrixXd z;            // latent normals, months x stations
    HistoricalPanel monthly;      // model units
};

CopulaFixture make_copula_fixture(const FixtureOptions& options = {});

/// Hourly capacity factors for the generation stations of `fixture`: a diurnal
/// shape with hourly noise, scaled to each month's value and clipped to [0, 1].
HistoricalPanel make_hourly_generation(const CopulaFixture& fixture, std::uint64_t seed);

/// 8 stations (3 hydro + 5 generation), 30 years monthly: data.csv,
/// metadata.csv, truth.json and run.json.
void write_desk_fixture(const std::filesystem::path& dir, std::uint64_t seed);

/// 10 stations (4 hydro monthly + 6 generation hourly), 30 years: hourly.csv,
/// inflow.csv, metadata.csv and run.json.
void write_hourly_fixture(const std::filesystem::path& dir, std::uint64_t seed);

/// 50 stations (20 hydro + 30 generation), 30 years monthly.
void write_wide_fixture(const std::filesystem::path& dir, std::uint64_t seed);

}  // namespace scengen
