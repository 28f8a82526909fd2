#include "scengen/reference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "scengen/rng.hpp"

namespace scengen::reference {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

Eigen::MatrixXd aggregate_to_monthly(const HistoricalPanel& hourly) {
    const auto first = year_month_of(hourly.index().front());
    const int n_months = year_month_of(hourly.index().back()).minus(first) + 1;
    const auto n_cols = static_cast<Eigen::Index>(hourly.cols());
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(n_months, n_cols);
    Eigen::MatrixXi count = Eigen::MatrixXi::Zero(n_months, n_cols);
    for (std::size_t r = 0; r < hourly.rows(); ++r) {
        const int m = year_month_of(hourly.index()[r]).minus(first);
        for (Eigen::Index c = 0; c < n_cols; ++c) {
            const double v = hourly.values()(static_cast<Eigen::Index>(r), c);
            if (std::isnan(v)) continue;
            sum(m, c) += v;
            ++count(m, c);
        }
    }
    Eigen::MatrixXd out(n_months, n_cols);
    for (int m = 0; m < n_months; ++m) {
        const int hours = first.next(m).hours();
        for (Eigen::Index c = 0; c < n_cols; ++c) out(m, c) = count(m, c) == hours ? sum(m, c) / hours : kNaN;
    }
    return out;
}

Eigen::MatrixXd forward(const HistoricalPanel& panel, const MarginalMap& marginals) {
    Eigen::MatrixXd z(panel.values().rows(), panel.values().cols());
    for (std::size_t c = 0; c < panel.cols(); ++c) {
        const auto& m = marginals.find(panel.stations()[c].id)->second;
        for (Eigen::Index r = 0; r < z.rows(); ++r)
            z(r, static_cast<Eigen::Index>(c)) = to_normal(m, panel.values()(r, static_cast<Eigen::Index>(c)));
    }
    return z;
}

Eigen::MatrixXd inverse(const NormalPanel& zp, const MarginalMap& marginals) {
    Eigen::MatrixXd x(zp.z.rows(), zp.z.cols());
    for (std::size_t c = 0; c < zp.cols(); ++c) {
        const auto& m = marginals.find(zp.stations[c].id)->second;
        for (Eigen::Index r = 0; r < x.rows(); ++r)
            x(r, static_cast<Eigen::Index>(c)) = from_normal(m, zp.z(r, static_cast<Eigen::Index>(c)));
    }
    return x;
}

Eigen::MatrixXd correlation(const Eigen::MatrixXd& data) {
    const auto k = data.cols();
    Eigen::MatrixXd r = Eigen::MatrixXd::Constant(k, k, kNaN);
    for (Eigen::Index a = 0; a < k; ++a)
        for (Eigen::Index b = 0; b < k; ++b) {
            std::vector<double> x, y;
            for (Eigen::Index i = 0; i < data.rows(); ++i)
                if (!std::isnan(data(i, a)) && !std::isnan(data(i, b))) {
                    x.push_back(data(i, a));
                    y.push_back(data(i, b));
                }
            if (x.size() < 4) continue;
            double mx = 0.0, my = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) {
                mx += x[i];
                my += y[i];
            }
            mx /= static_cast<double>(x.size());
            my /= static_cast<double>(y.size());
            double sxy = 0.0, sxx = 0.0, syy = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) {
                sxy += (x[i] - mx) * (y[i] - my);
                sxx += (x[i] - mx) * (x[i] - mx);
                syy += (y[i] - my) * (y[i] - my);
            }
            if (sxx > 0.0 && syy > 0.0) r(a, b) = a == b ? 1.0 : sxy / std::sqrt(sxx * syy);
        }
    return r;
}

std::vector<Eigen::MatrixXd> sample(const BayesNet& net, std::size_t n_scenarios, std::size_t horizon,
                                    std::uint64_t seed) {
    const auto order = net.dag.topological_order();
    std::vector<Eigen::MatrixXd> out;
    for (std::size_t s = 0; s < n_scenarios; ++s) {
        Eigen::MatrixXd z(static_cast<Eigen::Index>(horizon), static_cast<Eigen::Index>(net.dag.size()));
        for (std::size_t t = 0; t < horizon; ++t)
            for (auto node : order) {
                const auto& reg = net.regressions[node];
                double q = 0.0;
                for (std::size_t k = 0; k < reg.parents.size(); ++k)
                    q += reg.coefficients[k] * z(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(net.dag.parents[node][k]));
                const auto bits = rng::at(seed, {s, t, node});
                q += reg.residuals[rng::below(bits, reg.residuals.size())];
                z(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(node)) = q;
            }
        out.push_back(std::move(z));
    }
    return out;
}

std::size_t nearest_year(const DisaggMonth& month, const Eigen::VectorXd& station_cf) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index y = 0; y < month.cf.rows(); ++y) {
        double d = 0.0;
        for (Eigen::Index k = 0; k < month.loadings.cols(); ++k) {
            double py = 0.0, ps = 0.0;
            for (Eigen::Index c = 0; c < month.loadings.rows(); ++c) {
                py += (month.cf(y, c) - month.means(c)) * month.loadings(c, k);
                ps += (station_cf(c) - month.means(c)) * month.loadings(c, k);
            }
            d += (py - ps) * (py - ps);
        }
        if (d < best_d) {
            best_d = d;
            best = static_cast<std::size_t>(y);
        }
    }
    return best;
}

std::vector<Eigen::MatrixXd> disaggregate(const ScenarioSet& monthly, const DisaggModel& model) {
    std::vector<std::string> ids;
    for (const auto& s : model.stations) ids.push_back(s.id);
    const auto cf = select(monthly, ids);
    std::vector<Eigen::MatrixXd> out;
    for (const auto& v : cf.values) {
        std::vector<std::vector<double>> cols(ids.size());
        for (std::size_t t = 0; t < cf.index.size(); ++t) {
            const auto ym = year_month_of(cf.index[t]);
            const auto& dm = model.months[static_cast<std::size_t>(ym.month - 1)];
            const Eigen::VectorXd target = v.row(static_cast<Eigen::Index>(t)).transpose();
            const int year = dm.years[reference::nearest_year(dm, target)];
            const auto len = static_cast<std::size_t>(ym.hours());
            for (std::size_t c = 0; c < ids.size(); ++c) {
                const auto hist = model.profile(year, ym.month, c);
                std::vector<double> prof(len);
                for (std::size_t h = 0; h < len; ++h)
                    prof[h] = h < hist.size() ? hist[h] : hist[hist.size() - 24 + (h - hist.size()) % 24];
                double mean = 0.0;
                for (double p : prof) mean += p;
                mean /= static_cast<double>(len);
                const double goal = target(static_cast<Eigen::Index>(c));
                for (double& p : prof) p = mean < 1e-6 ? goal : std::clamp(p * goal / mean, 0.0, 1.0);
                cols[c].insert(cols[c].end(), prof.begin(), prof.end());
            }
        }
        Eigen::MatrixXd m(static_cast<Eigen::Index>(cols.empty() ? 0 : cols[0].size()), static_cast<Eigen::Index>(ids.size()));
        for (std::size_t c = 0; c < ids.size(); ++c)
            for (std::size_t h = 0; h < cols[c].size(); ++h) m(static_cast<Eigen::Index>(h), static_cast<Eigen::Index>(c)) = cols[c][h];
        out.push_back(std::move(m));
    }
    return out;
}

}  // namespace scengen::reference
