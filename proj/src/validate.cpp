#include "scengen/validate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>
#include <fmt/os.h>

#include "scengen/error.hpp"
#include "scengen/normal.hpp"

namespace scengen {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void correlate_pair(const Eigen::MatrixXd& data, Eigen::Index a, Eigen::Index b, double& r, int& n) {
    double sa = 0.0, sb = 0.0;
    n = 0;
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        const double x = data(i, a), y = data(i, b);
        if (std::isnan(x) || std::isnan(y)) continue;
        sa += x;
        sb += y;
        ++n;
    }
    if (n < 4) {
        r = kNaN;
        return;
    }
    const double ma = sa / n, mb = sb / n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        const double x = data(i, a), y = data(i, b);
        if (std::isnan(x) || std::isnan(y)) continue;
        sxx += (x - ma) * (x - ma);
        syy += (y - mb) * (y - mb);
        sxy += (x - ma) * (y - mb);
    }
    if (!(sxx > 0.0) || !(syy > 0.0)) {
        r = kNaN;
        return;
    }
    r = a == b ? 1.0 : std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace

FisherResult fisher_z_pair(double r1, long n1, double r2, long n2) {
    if (!(std::fabs(r1) < 1.0) || !(std::fabs(r2) < 1.0))
        throw ArgumentError(fmt::format("correlations must lie in (-1, 1), got {} and {}", r1, r2));
    if (n1 < 4 || n2 < 4) throw ArgumentError(fmt::format("sample sizes must be >= 4, got {} and {}", n1, n2));
    const double se = std::sqrt(1.0 / static_cast<double>(n1 - 3) + 1.0 / static_cast<double>(n2 - 3));
    const double t = (std::atanh(r1) - std::atanh(r2)) / se;
    return {t, std::erfc(std::fabs(t) * kInvSqrt2)};
}

CorrelationMatrix correlation_matrix(const Eigen::MatrixXd& data, bool parallel) {
    const auto k = data.cols();
    CorrelationMatrix out{Eigen::MatrixXd::Constant(k, k, kNaN), Eigen::MatrixXi::Zero(k, k)};
#pragma omp parallel for schedule(dynamic, 1) if (parallel)
    for (Eigen::Index a = 0; a < k; ++a)
        for (Eigen::Index b = a; b < k; ++b) {
            double r = kNaN;
            int n = 0;
            correlate_pair(data, a, b, r, n);
            out.r(a, b) = out.r(b, a) = r;
            out.n(a, b) = out.n(b, a) = n;
        }
    return out;
}

CorrelationMatrix correlation_matrix(const HistoricalPanel& panel) { return correlation_matrix(panel.values()); }

Eigen::MatrixXd pooled_rows(const ScenarioSet& set) {
    const auto t = static_cast<Eigen::Index>(set.index.size());
    Eigen::MatrixXd rows(t * static_cast<Eigen::Index>(set.scenario_count()), static_cast<Eigen::Index>(set.stations.size()));
    for (std::size_t s = 0; s < set.scenario_count(); ++s) rows.middleRows(static_cast<Eigen::Index>(s) * t, t) = set.values[s];
    return rows;
}

CorrelationMatrix correlation_matrix(const ScenarioSet& set) { return correlation_matrix(pooled_rows(set)); }

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw ArgumentError("KS test needs two non-empty samples");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

double ks_one_sample(std::vector<double> sample, const std::function<double(double)>& cdf) {
    if (sample.empty()) throw ArgumentError("KS test needs a non-empty sample");
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double f = cdf(sample[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}

double ks_critical(std::size_t n, double alpha) {
    // c(alpha) = sqrt(-ln(alpha/2) / 2); 1.358 at 5%.
    return std::sqrt(-0.5 * std::log(alpha / 2.0)) / std::sqrt(static_cast<double>(n));
}

double empirical_quantile(std::vector<double> values, double p) {
    if (values.empty()) return kNaN;
    std::sort(values.begin(), values.end());
    const double pos = p * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

ValidationReport build_report(const HistoricalPanel& historical, const ScenarioSet& synthetic,
                              const ReportOptions& options) {
    if (!(options.alpha > 0.0 && options.alpha <= 1.0)) throw ArgumentError("alpha must lie in (0, 1]");
    if (!(options.band_level > 0.0 && options.band_level < 1.0)) throw ArgumentError("band level must lie in (0, 1)");
    std::vector<std::string> common;
    for (const auto& s : historical.stations())
        if (synthetic.find(s.id)) common.push_back(s.id);
    if (common.empty()) throw ArgumentError("historical and synthetic station sets are disjoint");

    const auto hist = historical.select(common);
    const auto synth = select(synthetic, common);
    const auto pooled = pooled_rows(synth);
    const auto ch = correlation_matrix(hist.values());
    const auto cs = correlation_matrix(pooled);

    ValidationReport rep;
    rep.alpha = options.alpha;
    rep.band_level = options.band_level;
    const auto k = common.size();
    double abs_diff = 0.0;
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = a + 1; b < k; ++b) {
            const auto ia = static_cast<Eigen::Index>(a), ib = static_cast<Eigen::Index>(b);
            const double rh = ch.r(ia, ib), rs = cs.r(ia, ib);
            if (std::isnan(rh) || std::isnan(rs) || std::fabs(rh) >= 1.0 || std::fabs(rs) >= 1.0) {
                rep.untestable.emplace_back(common[a], common[b]);
                continue;
            }
            PairTest pt{common[a], common[b], rh, rs, ch.n(ia, ib), cs.n(ia, ib)};
            const auto f = fisher_z_pair(rh, pt.n_hist, rs, pt.n_synth);
            pt.statistic = f.statistic;
            pt.p_value = f.p_value;
            pt.pass = f.p_value > options.alpha;
            const bool hydro_pair = hist.stations()[a].kind == StationKind::Hydro &&
                                    hist.stations()[b].kind == StationKind::Hydro;
            if (hydro_pair) {
                rep.hydro_pairs.push_back(pt);
            } else {
                abs_diff += std::fabs(rs - rh);
                rep.pair_tests.push_back(pt);
            }
        }
    auto fraction = [](const std::vector<PairTest>& v) {
        if (v.empty()) return 0.0;
        const auto passed = std::count_if(v.begin(), v.end(), [](const PairTest& p) { return p.pass; });
        return static_cast<double>(passed) / static_cast<double>(v.size());
    };
    rep.pass_fraction = fraction(rep.pair_tests);
    rep.hydro_pass_fraction = fraction(rep.hydro_pairs);
    rep.mean_abs_corr_diff = rep.pair_tests.empty() ? 0.0 : abs_diff / static_cast<double>(rep.pair_tests.size());

    const double q_lo = 0.5 * (1.0 - options.band_level), q_hi = 0.5 * (1.0 + options.band_level);
    for (std::size_t c = 0; c < k; ++c) {
        const auto ic = static_cast<Eigen::Index>(c);
        std::vector<double> h_all = hist.observed(c), s_all;
        std::array<std::vector<double>, 12> h_month, s_month;
        for (std::size_t r = 0; r < hist.rows(); ++r) {
            const double v = hist.values()(static_cast<Eigen::Index>(r), ic);
            if (!std::isnan(v)) h_month[static_cast<std::size_t>(year_month_of(hist.index()[r]).month - 1)].push_back(v);
        }
        for (const auto& sv : synth.values)
            for (std::size_t t = 0; t < synth.index.size(); ++t) {
                const double v = sv(static_cast<Eigen::Index>(t), ic);
                if (std::isnan(v)) continue;
                s_all.push_back(v);
                s_month[static_cast<std::size_t>(year_month_of(synth.index[t]).month - 1)].push_back(v);
            }
        if (!h_all.empty() && !s_all.empty()) rep.pdf_distances.emplace_back(common[c], ks_two_sample(h_all, s_all));
        for (int m = 0; m < 12; ++m) {
            const auto& hm = h_month[static_cast<std::size_t>(m)];
            const auto& sm = s_month[static_cast<std::size_t>(m)];
            if (hm.empty() || sm.empty()) continue;
            auto mean = [](const std::vector<double>& v) {
                return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
            };
            rep.bands.push_back({common[c], m + 1, mean(hm), empirical_quantile(hm, q_lo), empirical_quantile(hm, q_hi),
                                 mean(sm), empirical_quantile(sm, q_lo), empirical_quantile(sm, q_hi)});
        }
    }
    return rep;
}

nlohmann::json to_json(const ValidationReport& report) {
    auto pairs = [](const std::vector<PairTest>& v) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& p : v)
            arr.push_back({{"station_a", p.station_a}, {"station_b", p.station_b}, {"r_hist", p.r_hist},
                           {"r_synth", p.r_synth}, {"n_hist", p.n_hist}, {"n_synth", p.n_synth},
                           {"z_statistic", p.statistic}, {"p_value", p.p_value}, {"pass", p.pass}});
        return arr;
    };
    nlohmann::json j;
    j["alpha"] = report.alpha;
    j["band_level"] = report.band_level;
    j["pass_fraction"] = report.pass_fraction;
    j["mean_abs_corr_diff"] = report.mean_abs_corr_diff;
    j["pair_tests"] = pairs(report.pair_tests);
    j["hydro_pass_fraction"] = report.hydro_pass_fraction;
    j["hydro_pairs"] = pairs(report.hydro_pairs);
    j["untestable"] = nlohmann::json::array();
    for (const auto& [a, b] : report.untestable) j["untestable"].push_back({a, b});
    j["pdf_distances"] = nlohmann::json::object();
    for (const auto& [s, d] : report.pdf_distances) j["pdf_distances"][s] = d;
    j["confidence_bands"] = nlohmann::json::array();
    for (const auto& b : report.bands)
        j["confidence_bands"].push_back({{"station", b.station}, {"month", b.month}, {"hist_mean", b.hist_mean},
                                         {"hist_lo", b.hist_lo}, {"hist_hi", b.hist_hi}, {"synth_mean", b.synth_mean},
                                         {"synth_lo", b.synth_lo}, {"synth_hi", b.synth_hi}});
    return j;
}

void write_report(const ValidationReport& report, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    {
        auto out = fmt::output_file((dir / "report.json").string());
        out.print("{}\n", to_json(report).dump(2));
    }
    {
        auto out = fmt::output_file((dir / "fisher_hist.csv").string());
        out.print("bin_lo,bin_hi,count\n");
        if (!report.pair_tests.empty()) {
            constexpr double width = 0.5;
            double lo = std::numeric_limits<double>::infinity(), hi = -lo;
            for (const auto& p : report.pair_tests) {
                lo = std::min(lo, p.statistic);
                hi = std::max(hi, p.statistic);
            }
            lo = std::floor(lo / width) * width;
            const auto bins = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor((hi - lo) / width)) + 1);
            std::vector<std::size_t> counts(bins, 0);
            for (const auto& p : report.pair_tests)
                ++counts[std::min(bins - 1, static_cast<std::size_t>(std::floor((p.statistic - lo) / width)))];
            for (std::size_t b = 0; b < bins; ++b)
                out.print("{},{},{}\n", lo + width * static_cast<double>(b), lo + width * static_cast<double>(b + 1),
                          counts[b]);
        }
    }
    {
        auto out = fmt::output_file((dir / "corr_scatter.csv").string());
        out.print("station_a,station_b,r_hist,r_synth\n");
        for (const auto* v : {&report.pair_tests, &report.hydro_pairs})
            for (const auto& p : *v) out.print("{},{},{},{}\n", p.station_a, p.station_b, p.r_hist, p.r_synth);
    }
    {
        auto out = fmt::output_file((dir / "bands.csv").string());
        out.print("station,month,hist_mean,hist_lo,hist_hi,synth_mean,synth_lo,synth_hi\n");
        for (const auto& b : report.bands)
            out.print("{},{},{},{},{},{},{},{}\n", b.station, b.month, b.hist_mean, b.hist_lo, b.hist_hi, b.synth_mean,
                      b.synth_lo, b.synth_hi);
    }
}

}  // namespace scengen
