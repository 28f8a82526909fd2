#include "scengen/inflow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "scengen/error.hpp"
#include "scengen/normal.hpp"
#include "scengen/rng.hpp"

namespace scengen {

namespace {

constexpr int kBurnIn = 120;
constexpr std::uint64_t kInflowStream = 0x1f10;

void shrink_to_stationary(std::vector<double>& phi) {
    double sum = 0.0;
    for (double v : phi) sum += std::fabs(v);
    if (sum >= 1.0)
        for (double& v : phi) v *= 0.99 / sum;
}

}  // namespace

InflowModel fit_inflow_ar(const HistoricalPanel& panel, const InflowOptions& options) {
    if (panel.resolution() != Resolution::Monthly) throw ArgumentError("inflow model needs a monthly panel");
    if (options.order < 0) throw ArgumentError("AR order must be >= 0");
    const int p = options.order;
    const auto n_rows = static_cast<Eigen::Index>(panel.rows());

    std::vector<int> month_of(panel.rows());
    for (std::size_t r = 0; r < panel.rows(); ++r) month_of[r] = year_month_of(panel.index()[r]).month - 1;

    InflowModel model;
    model.order = p;
    model.pooled = options.pooled;
    for (std::size_t c = 0; c < panel.cols(); ++c) {
        const auto& meta = panel.stations()[c];
        if (meta.unit() != Unit::Volume) throw ArgumentError("station '" + meta.id + "' is not an inflow series");
        const auto col = panel.values().col(static_cast<Eigen::Index>(c));

        InflowStation st;
        st.station = meta;
        double min_pos = std::numeric_limits<double>::infinity();
        for (Eigen::Index r = 0; r < n_rows; ++r)
            if (!std::isnan(col(r)) && col(r) > 0.0) min_pos = std::min(min_pos, col(r));
        if (!std::isfinite(min_pos))
            throw RangeError("station '" + meta.id + "': no positive inflow to anchor the zero floor");
        st.zero_floor = 0.5 * min_pos;

        Eigen::VectorXd logs(n_rows);
        for (Eigen::Index r = 0; r < n_rows; ++r)
            logs(r) = std::isnan(col(r)) ? col(r) : std::log(col(r) > 0.0 ? col(r) : st.zero_floor);

        for (int m = 0; m < 12; ++m) {
            double sum = 0.0, n = 0.0;
            for (Eigen::Index r = 0; r < n_rows; ++r)
                if (month_of[static_cast<std::size_t>(r)] == m && !std::isnan(logs(r))) {
                    sum += logs(r);
                    n += 1.0;
                }
            if (n < 5.0)
                throw InsufficientDataError(fmt::format("station '{}': month {} has {} observations, need 5",
                                                        meta.id, m + 1, n));
            const double mean = sum / n;
            double ss = 0.0;
            for (Eigen::Index r = 0; r < n_rows; ++r)
                if (month_of[static_cast<std::size_t>(r)] == m && !std::isnan(logs(r)))
                    ss += (logs(r) - mean) * (logs(r) - mean);
            const double sd = std::sqrt(ss / n);
            if (!(sd > 1e-12 * std::max(1.0, std::fabs(mean))))
                throw DegenerateMarginalError(fmt::format("station '{}': constant log inflow in month {}", meta.id, m + 1));
            st.months[static_cast<std::size_t>(m)].log_mean = mean;
            st.months[static_cast<std::size_t>(m)].log_std = sd;
        }

        Eigen::VectorXd w(n_rows);
        for (Eigen::Index r = 0; r < n_rows; ++r) {
            const auto& mp = st.months[static_cast<std::size_t>(month_of[static_cast<std::size_t>(r)])];
            w(r) = (logs(r) - mp.log_mean) / mp.log_std;
        }

        // Rows usable for a lag-p regression, optionally restricted to one month.
        auto design = [&](int month, Eigen::MatrixXd& x, Eigen::VectorXd& y) {
            std::vector<Eigen::Index> rows;
            for (Eigen::Index r = p; r < n_rows; ++r) {
                if (month >= 0 && month_of[static_cast<std::size_t>(r)] != month) continue;
                bool ok = !std::isnan(w(r));
                for (int k = 1; k <= p; ++k) ok = ok && !std::isnan(w(r - k));
                if (ok) rows.push_back(r);
            }
            x.resize(static_cast<Eigen::Index>(rows.size()), p);
            y.resize(static_cast<Eigen::Index>(rows.size()));
            for (std::size_t i = 0; i < rows.size(); ++i) {
                y(static_cast<Eigen::Index>(i)) = w(rows[i]);
                for (int k = 1; k <= p; ++k) x(static_cast<Eigen::Index>(i), k - 1) = w(rows[i] - k);
            }
        };
        auto solve = [&](const Eigen::MatrixXd& x, const Eigen::VectorXd& y, int month) {
            if (x.rows() < p + 2)
                throw InsufficientDataError(fmt::format("station '{}': {} lag rows for AR({}) in month {}", meta.id,
                                                        x.rows(), p, month + 1));
            Eigen::VectorXd phi = x.colPivHouseholderQr().solve(y);
            std::vector<double> out(phi.data(), phi.data() + phi.size());
            shrink_to_stationary(out);
            return out;
        };

        Eigen::MatrixXd x;
        Eigen::VectorXd y;
        std::vector<double> shared;
        if (p > 0 && options.pooled) {
            design(-1, x, y);
            shared = solve(x, y, -1);
        }
        for (int m = 0; m < 12; ++m) {
            auto& mp = st.months[static_cast<std::size_t>(m)];
            design(m, x, y);
            if (p > 0) mp.phi = options.pooled ? shared : solve(x, y, m);
            if (y.size() == 0) {
                mp.innovation_std = 1.0;
                continue;
            }
            Eigen::VectorXd resid = y;
            for (int k = 0; k < p; ++k) resid -= mp.phi[static_cast<std::size_t>(k)] * x.col(k);
            mp.innovation_std = std::sqrt(resid.squaredNorm() / static_cast<double>(resid.size()));
        }
        model.stations.push_back(std::move(st));
    }
    return model;
}

ScenarioSet generate_inflows(const InflowModel& model, std::size_t n_scenarios, const std::vector<Timestamp>& horizon,
                             std::uint64_t seed) {
    if (n_scenarios == 0) throw ArgumentError("n_scenarios must be >= 1");
    if (horizon.empty()) throw ArgumentError("horizon is empty");
    const auto start = year_month_of(horizon.front());
    for (std::size_t t = 0; t < horizon.size(); ++t)
        if (horizon[t] != start.next(static_cast<int>(t)).start())
            throw ArgumentError("inflow horizon must be consecutive month starts");

    ScenarioSet out;
    out.seed = seed;
    out.index = horizon;
    out.resolution = Resolution::Monthly;
    for (const auto& st : model.stations) out.stations.push_back(st.station);
    out.values.resize(n_scenarios);

    const int total = kBurnIn + static_cast<int>(horizon.size());
    std::vector<int> month(static_cast<std::size_t>(total));
    for (int k = 0; k < total; ++k) month[static_cast<std::size_t>(k)] = start.next(k - kBurnIn).month - 1;
    const auto n_sc = static_cast<std::ptrdiff_t>(n_scenarios);
    const int p = model.order;

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t s = 0; s < n_sc; ++s) {
        Eigen::MatrixXd v(static_cast<Eigen::Index>(horizon.size()), static_cast<Eigen::Index>(model.stations.size()));
        std::vector<double> w(static_cast<std::size_t>(total));
        for (std::size_t c = 0; c < model.stations.size(); ++c) {
            const auto& st = model.stations[c];
            for (int k = 0; k < total; ++k) {
                const auto& mp = st.months[static_cast<std::size_t>(month[static_cast<std::size_t>(k)])];
                double value = 0.0;
                for (int j = 1; j <= p && j <= k; ++j)
                    value += mp.phi[static_cast<std::size_t>(j - 1)] * w[static_cast<std::size_t>(k - j)];
                const auto bits = rng::at(seed, {kInflowStream, static_cast<std::uint64_t>(s),
                                                 static_cast<std::uint64_t>(k), c});
                value += mp.innovation_std * normal_quantile(rng::open01(bits));
                w[static_cast<std::size_t>(k)] = value;
                if (k >= kBurnIn)
                    v(k - kBurnIn, static_cast<Eigen::Index>(c)) = std::exp(mp.log_mean + mp.log_std * value);
            }
        }
        out.values[static_cast<std::size_t>(s)] = std::move(v);
    }
    return out;
}

}  // namespace scengen
