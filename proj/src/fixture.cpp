#include "scengen/fixture.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/distributions/beta.hpp>
#include <fmt/format.h>
#include <fmt/os.h>
#include <json.hpp>

#include "scengen/error.hpp"
#include "scengen/normal.hpp"
#include "scengen/rng.hpp"

namespace scengen {

namespace {

constexpr std::uint64_t kLoadingStream = 0xf1;
constexpr std::uint64_t kLatentStream = 0xf2;
constexpr std::uint64_t kHourlyStream = 0xf3;
constexpr std::uint64_t kParamStream = 0xf4;

constexpr StationKind kGenerationKinds[] = {StationKind::Wind, StationKind::Csp, StationKind::Dgsp,
                                            StationKind::SmallHydro, StationKind::Wind, StationKind::Dgsp};

double uniform(std::uint64_t seed, std::initializer_list<std::uint64_t> coords) {
    return rng::open01(rng::at(seed, coords));
}

double gaussian(std::uint64_t seed, std::initializer_list<std::uint64_t> coords) {
    return normal_quantile(uniform(seed, coords));
}

bool is_solar(StationKind k) { return k == StationKind::Csp || k == StationKind::Dgsp; }

void write_long_csv(const HistoricalPanel& panel, fmt::ostream& out, bool header) {
    if (header) out.print("timestamp,station_id,value\n");
    const auto& v = panel.values();
    for (std::size_t r = 0; r < panel.rows(); ++r) {
        const auto ts = format_timestamp(panel.index()[r], panel.resolution());
        for (std::size_t c = 0; c < panel.cols(); ++c) {
            const double x = v(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
            if (std::isnan(x)) continue;
            const auto& s = panel.stations()[c];
            out.print("{},{},{}\n", ts, s.id, s.unit() == Unit::CapacityFactor ? x * s.capacity : x);
        }
    }
}

void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
    auto out = fmt::output_file(path.string());
    out.print("{}\n", j.dump(2));
}

nlohmann::json run_json(const nlohmann::json& paths) {
    nlohmann::json j = paths;
    j["output_dir"] = "out";
    j["model"] = {{"max_parents", 6}, {"restarts", 5}, {"kde_grid_size", 2048}, {"pca_variance_threshold", 0.95},
                  {"ar_order", 1}};
    j["simulation"] = {{"n_scenarios", 100}, {"horizon_start", "2020-01"}, {"horizon_months", 12}, {"seed", 42}};
    j["validation"] = {{"alpha", 0.10}, {"band_level", 0.90}};
    return j;
}

nlohmann::json truth_json(const CopulaFixture& f) {
    nlohmann::json j;
    j["stations"] = nlohmann::json::array();
    for (std::size_t i = 0; i < f.stations.size(); ++i) {
        const auto& m = f.marginals[i];
        if (f.stations[i].unit() == Unit::Volume)
            j["stations"].push_back({{"id", f.stations[i].id}, {"marginal", "lognormal"}, {"mu", m.mu}, {"sigma", m.sigma}});
        else
            j["stations"].push_back({{"id", f.stations[i].id}, {"marginal", "beta"}, {"a", m.a}, {"b", m.b}});
    }
    j["correlation"] = nlohmann::json::array();
    for (Eigen::Index r = 0; r < f.correlation.rows(); ++r) {
        std::vector<double> row(static_cast<std::size_t>(f.correlation.cols()));
        for (Eigen::Index c = 0; c < f.correlation.cols(); ++c) row[static_cast<std::size_t>(c)] = f.correlation(r, c);
        j["correlation"].push_back(row);
    }
    return j;
}

}  // namespace

CopulaFixture make_copula_fixture(const FixtureOptions& o) {
    if (o.n_hydro + o.n_vre == 0 || o.years < 1 || o.factors < 1) throw ArgumentError("empty fixture requested");
    const std::size_t n = o.n_hydro + o.n_vre;
    const std::uint64_t seed = o.seed;

    std::vector<StationMeta> stations;
    std::vector<FixtureMarginal> marg;
    for (std::size_t i = 0; i < o.n_hydro; ++i) {
        stations.push_back({fmt::format("H{:02}", i + 1), StationKind::Hydro, 0.0, true});
        marg.push_back({0.0, 0.0, std::log(400.0 + 1600.0 * uniform(seed, {kParamStream, i, 0})),
                        0.35 + 0.25 * uniform(seed, {kParamStream, i, 1})});
    }
    for (std::size_t i = 0; i < o.n_vre; ++i) {
        const auto kind = kGenerationKinds[i % std::size(kGenerationKinds)];
        const auto k = o.n_hydro + i;
        const double capacity = std::round(50.0 + 350.0 * uniform(seed, {kParamStream, k, 2}));
        stations.push_back({fmt::format("G{:02}", i + 1), kind, capacity, false});
        // Solar sits lower and tighter than wind.
        const double mean = is_solar(kind) ? 0.18 + 0.08 * uniform(seed, {kParamStream, k, 0})
                                           : 0.30 + 0.15 * uniform(seed, {kParamStream, k, 0});
        const double conc = 12.0 + 10.0 * uniform(seed, {kParamStream, k, 1});
        marg.push_back({mean * conc, (1.0 - mean) * conc, 0.0, 0.0});
    }

    Eigen::MatrixXd load(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(o.factors));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t f = 0; f < o.factors; ++f) {
            double l = 0.3 + 0.5 * uniform(seed, {kLoadingStream, i, f});
            if (uniform(seed, {kLoadingStream, i, f, 1}) < 0.3) l = -l;
            load(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f)) = l;
        }
        const double norm = load.row(static_cast<Eigen::Index>(i)).norm();
        if (norm > 0.9) load.row(static_cast<Eigen::Index>(i)) *= 0.9 / norm;
    }
    const Eigen::VectorXd uniq = (1.0 - load.rowwise().squaredNorm().array()).sqrt();
    Eigen::MatrixXd corr = load * load.transpose();
    corr.diagonal().setOnes();

    const auto months = static_cast<std::size_t>(o.years) * 12;
    Eigen::MatrixXd z(static_cast<Eigen::Index>(months), static_cast<Eigen::Index>(n));
    Eigen::MatrixXd x(z.rows(), z.cols());
    for (std::size_t t = 0; t < months; ++t) {
        Eigen::VectorXd f(static_cast<Eigen::Index>(o.factors));
        for (std::size_t k = 0; k < o.factors; ++k) f(static_cast<Eigen::Index>(k)) = gaussian(seed, {kLatentStream, t, k});
        for (std::size_t i = 0; i < n; ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            const auto tt = static_cast<Eigen::Index>(t);
            z(tt, ii) = load.row(ii).dot(f) + uniq(ii) * gaussian(seed, {kLatentStream, t, o.factors + i});
            const auto& m = marg[i];
            if (stations[i].unit() == Unit::Volume) {
                x(tt, ii) = std::exp(m.mu + m.sigma * z(tt, ii));
            } else {
                const double u = std::clamp(normal_cdf(z(tt, ii)), 1e-12, 1.0 - 1e-12);
                x(tt, ii) = boost::math::quantile(boost::math::beta_distribution<double>(m.a, m.b), u);
            }
        }
    }
    auto index = month_range({o.start_year, 1}, static_cast<int>(months));
    return {stations, marg, corr, z, HistoricalPanel(stations, std::move(index), x, Resolution::Monthly)};
}

HistoricalPanel make_hourly_generation(const CopulaFixture& fixture, std::uint64_t seed) {
    std::vector<std::string> ids;
    for (const auto& s : fixture.stations)
        if (s.unit() == Unit::CapacityFactor) ids.push_back(s.id);
    if (ids.empty()) throw ArgumentError("fixture has no generation stations");
    const auto monthly = fixture.monthly.select(ids);
    const auto hours = hours_of(monthly.index());
    Eigen::MatrixXd v(static_cast<Eigen::Index>(hours.size()), static_cast<Eigen::Index>(ids.size()));

    for (std::size_t c = 0; c < ids.size(); ++c) {
        const auto kind = monthly.stations()[c].kind;
        const auto col = static_cast<Eigen::Index>(c);
        std::size_t row = 0;
        double noise = 0.0;
        for (std::size_t t = 0; t < monthly.rows(); ++t) {
            const auto len = static_cast<std::size_t>(year_month_of(monthly.index()[t]).hours());
            std::vector<double> shape(len);
            for (std::size_t h = 0; h < len; ++h) {
                const auto k = row + h;
                noise = 0.9 * noise + 0.2 * gaussian(seed, {kHourlyStream, c, k});
                const double hod = static_cast<double>(h % 24);
                double s;
                if (is_solar(kind)) {
                    const double sun = std::sin(std::numbers::pi * (hod - 6.0) / 12.0);
                    s = hod > 6.0 && hod < 18.0 ? sun * std::exp(0.5 * noise) : 0.0;
                } else {
                    s = std::max(0.0, 1.0 + 0.25 * std::sin(2.0 * std::numbers::pi * (hod + 6.0) / 24.0) + noise);
                }
                shape[h] = s;
            }
            double mean = 0.0;
            for (double s : shape) mean += s;
            mean /= static_cast<double>(len);
            const double target = monthly.values()(static_cast<Eigen::Index>(t), col);
            for (std::size_t h = 0; h < len; ++h)
                v(static_cast<Eigen::Index>(row + h), col) =
                    std::clamp(mean > 0.0 ? shape[h] * target / mean : target, 0.0, 1.0);
            row += len;
        }
    }
    return HistoricalPanel(monthly.stations(), hours, std::move(v), Resolution::Hourly);
}

void write_desk_fixture(const std::filesystem::path& dir, std::uint64_t seed) {
    std::filesystem::create_directories(dir);
    const auto f = make_copula_fixture({3, 5, 30, 1990, 2, seed});
    write_metadata(f.stations, dir / "metadata.csv");
    {
        auto out = fmt::output_file((dir / "data.csv").string());
        write_long_csv(f.monthly, out, true);
    }
    write_json(truth_json(f), dir / "truth.json");
    write_json(run_json({{"data", "data.csv"}, {"metadata", "metadata.csv"}}), dir / "run.json");
}

void write_hourly_fixture(const std::filesystem::path& dir, std::uint64_t seed) {
    std::filesystem::create_directories(dir);
    const auto f = make_copula_fixture({4, 6, 30, 1990, 2, seed});
    write_metadata(f.stations, dir / "metadata.csv");
    std::vector<std::string> hydro;
    for (const auto& s : f.stations)
        if (s.unit() == Unit::Volume) hydro.push_back(s.id);
    {
        auto out = fmt::output_file((dir / "inflow.csv").string());
        write_long_csv(f.monthly.select(hydro), out, true);
    }
    {
        auto out = fmt::output_file((dir / "hourly.csv").string());
        write_long_csv(make_hourly_generation(f, seed), out, true);
    }
    write_json(truth_json(f), dir / "truth.json");
    write_json(run_json({{"data", "hourly.csv"}, {"inflow_data", "inflow.csv"}, {"metadata", "metadata.csv"}}),
               dir / "run.json");
}

void write_wide_fixture(const std::filesystem::path& dir, std::uint64_t seed) {
    std::filesystem::create_directories(dir);
    const auto f = make_copula_fixture({20, 30, 30, 1990, 3, seed});
    write_metadata(f.stations, dir / "metadata.csv");
    {
        auto out = fmt::output_file((dir / "data.csv").string());
        write_long_csv(f.monthly, out, true);
    }
    write_json(truth_json(f), dir / "truth.json");
    write_json(run_json({{"data", "data.csv"}, {"metadata", "metadata.csv"}}), dir / "run.json");
}

}  // namespace scengen
