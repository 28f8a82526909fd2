#include "scengen/disagg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>
#include <fmt/os.h>

#include "scengen/error.hpp"

namespace scengen {

namespace {

constexpr double kFlatThreshold = 1e-6;

// Rescales one station-month profile in place; returns (clipped hours, relative deviation).
std::pair<std::size_t, double> rescale(std::span<const double> historical, double target, std::span<double> out) {
    const std::size_t n = out.size();
    // Months of different length (leap Februaries) reuse the final day cyclically.
    const std::size_t tail = std::min<std::size_t>(24, historical.size());
    for (std::size_t h = 0; h < n; ++h)
        out[h] = h < historical.size() ? historical[h]
                                       : historical[historical.size() - tail + (h - historical.size()) % tail];
    double mean = 0.0;
    for (double v : out) mean += v;
    mean /= static_cast<double>(n);

    if (mean < kFlatThreshold) {
        std::fill(out.begin(), out.end(), target);
        return {0, 0.0};
    }
    const double ratio = target / mean;
    std::size_t clipped = 0;
    double sum = 0.0;
    for (double& v : out) {
        double x = v * ratio;
        if (x > 1.0 || x < 0.0) {
            x = std::clamp(x, 0.0, 1.0);
            ++clipped;
        }
        v = x;
        sum += x;
    }
    if (clipped == 0) return {0, 0.0};
    const double achieved = sum / static_cast<double>(n);
    return {clipped, target > 0.0 ? (achieved - target) / target : achieved - target};
}

}  // namespace

std::span<const double> DisaggModel::profile(int year, int month, std::size_t station) const {
    if (!hourly) throw ConfigurationError("disaggregation model has no hourly history attached");
    const YearMonth ym{year, month};
    const auto& idx = hourly->index();
    const auto start = ym.start();
    if (idx.empty() || start < idx.front()) throw ArgumentError("profile " + ym.str() + " precedes the hourly history");
    const auto row = static_cast<std::size_t>((start - idx.front()) / std::chrono::hours{1});
    const auto len = static_cast<std::size_t>(ym.hours());
    if (row + len > idx.size()) throw ArgumentError("profile " + ym.str() + " exceeds the hourly history");
    const double* col = hourly->values().col(static_cast<Eigen::Index>(station)).data();
    return {col + row, len};
}

Eigen::MatrixXd principal_loadings(const Eigen::MatrixXd& centred, double threshold, double& retained_fraction) {
    const auto n_years = centred.rows();
    const auto n_st = centred.cols();
    const Eigen::MatrixXd cov = centred.transpose() * centred / static_cast<double>(std::max<Eigen::Index>(n_years - 1, 1));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    // Eigen returns ascending eigenvalues.
    Eigen::VectorXd values = eig.eigenvalues().reverse().cwiseMax(0.0);
    Eigen::MatrixXd vectors = eig.eigenvectors().rowwise().reverse();

    const double total = values.sum();
    Eigen::Index keep = 1;
    if (total > 0.0) {
        double acc = 0.0;
        for (keep = 0; keep < n_st;) {
            acc += values(keep++);
            if (acc >= threshold * total - 1e-12 * total) break;
        }
        retained_fraction = acc / total;
    } else {
        retained_fraction = 1.0;
    }

    Eigen::MatrixXd w = vectors.leftCols(keep);
    for (Eigen::Index k = 0; k < keep; ++k) {
        Eigen::Index arg = 0;
        w.col(k).cwiseAbs().maxCoeff(&arg);
        if (w(arg, k) < 0.0) w.col(k) = -w.col(k);
    }
    return w;
}

DisaggModel fit_disagg(std::shared_ptr<const HistoricalPanel> hourly, const DisaggOptions& options) {
    if (!hourly) throw ArgumentError("fit_disagg needs an hourly panel");
    if (!(options.variance_threshold > 0.0 && options.variance_threshold <= 1.0))
        throw ArgumentError("variance threshold must lie in (0, 1]");
    for (const auto& s : hourly->stations())
        if (s.unit() != Unit::CapacityFactor)
            throw ArgumentError("station '" + s.id + "' is not a capacity-factor series");

    const auto monthly = aggregate_to_monthly(*hourly);
    DisaggModel model;
    model.stations = hourly->stations();
    model.variance_threshold = options.variance_threshold;
    model.hourly = hourly;

    const auto n_st = static_cast<Eigen::Index>(monthly.cols());
    for (int m = 1; m <= 12; ++m) {
        auto& dm = model.months[static_cast<std::size_t>(m - 1)];
        std::vector<Eigen::Index> rows;
        for (std::size_t r = 0; r < monthly.rows(); ++r) {
            const auto ym = year_month_of(monthly.index()[r]);
            if (ym.month != m || monthly.values().row(static_cast<Eigen::Index>(r)).array().isNaN().any()) continue;
            rows.push_back(static_cast<Eigen::Index>(r));
            dm.years.push_back(ym.year);
        }
        if (rows.size() < 3)
            throw InsufficientDataError(fmt::format("month {} has {} complete historical years, need 3", m, rows.size()));
        dm.cf.resize(static_cast<Eigen::Index>(rows.size()), n_st);
        for (std::size_t i = 0; i < rows.size(); ++i) dm.cf.row(static_cast<Eigen::Index>(i)) = monthly.values().row(rows[i]);
        dm.means = dm.cf.colwise().mean().transpose();
        const Eigen::MatrixXd centred = dm.cf.rowwise() - dm.means.transpose();
        dm.loadings = principal_loadings(centred, options.variance_threshold, dm.retained_fraction);
        dm.projections = centred * dm.loadings;
    }
    return model;
}

std::size_t nearest_year(const DisaggMonth& month, const Eigen::VectorXd& station_cf) {
    const Eigen::RowVectorXd proj = (station_cf - month.means).transpose() * month.loadings;
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index y = 0; y < month.projections.rows(); ++y) {
        const double d = (month.projections.row(y) - proj).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = static_cast<std::size_t>(y);
        }
    }
    return best;
}

DisaggResult disaggregate(const ScenarioSet& monthly, const DisaggModel& model, bool parallel) {
    if (monthly.resolution != Resolution::Monthly) throw ArgumentError("disaggregate needs monthly scenarios");
    std::vector<std::string> ids;
    for (const auto& s : model.stations) ids.push_back(s.id);
    const ScenarioSet cf = select(monthly, ids);

    DisaggResult result;
    auto& out = result.hourly;
    out.stations = model.stations;
    out.resolution = Resolution::Hourly;
    out.seed = monthly.seed;
    out.index = hours_of(monthly.index);

    const std::size_t n_months = monthly.index.size();
    const std::size_t n_sc = monthly.scenario_count();
    const std::size_t n_st = model.stations.size();
    std::vector<std::size_t> offset(n_months + 1, 0);
    std::vector<YearMonth> ym(n_months);
    for (std::size_t t = 0; t < n_months; ++t) {
        ym[t] = year_month_of(monthly.index[t]);
        offset[t + 1] = offset[t] + static_cast<std::size_t>(ym[t].hours());
    }
    out.values.assign(n_sc, Eigen::MatrixXd(static_cast<Eigen::Index>(offset.back()), static_cast<Eigen::Index>(n_st)));
    // Failures are raised here; the parallel loop below must not throw.
    for (const auto& dm : model.months)
        for (int year : dm.years)
            for (std::size_t c = 0; c < n_st; ++c) (void)model.profile(year, static_cast<int>(&dm - model.months.data()) + 1, c);
    for (const auto& v : cf.values)
        if (v.array().isNaN().any() || (v.array() < 0.0).any() || (v.array() > 1.0).any())
            throw ArgumentError("monthly capacity factors must be present and lie in [0, 1]");

    result.provenance.resize(n_sc * n_months);
    result.clipping.resize(n_sc * n_months * n_st);

    const auto n_pairs = static_cast<std::ptrdiff_t>(n_sc * n_months);
#pragma omp parallel for schedule(dynamic, 4) if (parallel)
    for (std::ptrdiff_t pair = 0; pair < n_pairs; ++pair) {
        const auto s = static_cast<std::size_t>(pair) / n_months;
        const auto t = static_cast<std::size_t>(pair) % n_months;
        const auto& dm = model.months[static_cast<std::size_t>(ym[t].month - 1)];
        const Eigen::VectorXd v = cf.values[s].row(static_cast<Eigen::Index>(t)).transpose();
        const std::size_t y = nearest_year(dm, v);
        const int year = dm.years[y];
        result.provenance[static_cast<std::size_t>(pair)] = {s, monthly.index[t], year};

        const auto len = offset[t + 1] - offset[t];
        for (std::size_t c = 0; c < n_st; ++c) {
            double* dst = out.values[s].col(static_cast<Eigen::Index>(c)).data() + offset[t];
            const auto [clipped, dev] = rescale(model.profile(year, ym[t].month, c), v(static_cast<Eigen::Index>(c)),
                                                std::span<double>(dst, len));
            result.clipping[static_cast<std::size_t>(pair) * n_st + c] = {s, monthly.index[t], c, clipped, dev};
        }
    }
    return result;
}

void write_provenance(const DisaggResult& result, const std::filesystem::path& path) {
    auto out = fmt::output_file(path.string());
    out.print("scenario,month,selected_year\n");
    for (const auto& p : result.provenance)
        out.print("{},{},{}\n", p.scenario + 1, year_month_of(p.month).str(), p.selected_year);
}

void write_clipping(const DisaggResult& result, const std::filesystem::path& path) {
    auto out = fmt::output_file(path.string());
    out.print("scenario,month,station_id,clipped_hours,relative_deviation\n");
    for (const auto& c : result.clipping)
        out.print("{},{},{},{},{}\n", c.scenario + 1, year_month_of(c.month).str(), result.hourly.stations[c.station].id,
                  c.clipped_hours, c.relative_deviation);
}

}  // namespace scengen
