// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <string>

#include <boost/math/special_functions/erf.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <fmt/format.h>

#include "scengen/bnet.hpp"
#include "scengen/config.hpp"
#include "scengen/disagg.hpp"
#include "scengen/fixture.hpp"
#include "scengen/pipeline.hpp"
#include "scengen/transform.hpp"
#include "scengen/validate.hpp"
#include "support.hpp"

using namespace scengen;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

const std::string kCli = SCENGEN_CLI;

HistoricalPanel desk_panel() {
    return load_panel(testing::fixture_dir / "data.csv", testing::fixture_dir / "metadata.csv");
}

int run_cli(const std::string& args) {
    const std::string cmd = "\"" + kCli + "\" " + args + " >/dev/null";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string q(const std::filesystem::path& p) { return "\"" + p.string() + "\""; }

Outcome ac1_round_trip() {
    const auto panel = desk_panel();
    const auto margs = fit_marginals(panel, 2048);
    const auto back = inverse(forward(panel, margs), margs);
    double worst = 0.0;
    for (std::size_t c = 0; c < panel.cols(); ++c) {
        const auto col = panel.values().col(static_cast<Eigen::Index>(c));
        const double range = col.maxCoeff() - col.minCoeff();
        const double err = (back.values().col(static_cast<Eigen::Index>(c)) - col).cwiseAbs().maxCoeff();
        worst = std::max(worst, err / range);
    }
    return {worst <= 1e-6, fmt::format("max |error|/range = {:.3g}", worst)};
}

/// Exact draws from a reflected KDE: pick a kernel among samples and mirror
/// images, add noise, reject anything outside the support.
std::vector<double> draw_from(const MarginalModel& m, std::size_t n, std::uint64_t seed) {
    const auto& xs = m.samples();
    const auto sup = m.support();
    const std::uint64_t kinds = 1 + (std::isfinite(sup.lo) ? 1 : 0) + (std::isfinite(sup.hi) ? 1 : 0);
    std::vector<double> out;
    for (std::uint64_t k = 0; out.size() < n; ++k) {
        const auto pick = rng::below(rng::at(seed, {k, 0}), xs.size() * kinds);
        const double xi = xs[pick % xs.size()];
        const auto kind = pick / xs.size();
        double centre = xi;
        if (kind == 1) centre = std::isfinite(sup.lo) ? 2.0 * sup.lo - xi : 2.0 * sup.hi - xi;
        if (kind == 2) centre = 2.0 * sup.hi - xi;
        const double x = centre + m.bandwidth() * normal_quantile(rng::open01(rng::at(seed, {k, 1})));
        if (x >= sup.lo && x <= sup.hi) out.push_back(x);
    }
    return out;
}

Outcome ac2_pit() {
    const auto panel = desk_panel();
    const auto margs = fit_marginals(panel, 2048);
    const double crit = ks_critical(5000, 0.05);
    double worst = 0.0;
    bool ok = true;
    for (std::size_t c = 0; c < panel.cols(); ++c) {
        const auto& m = margs.at(panel.stations()[c].id);
        std::vector<double> u;
        for (double x : draw_from(m, 5000, 1000 + c)) u.push_back(m.cdf(x));
        const double d = ks_one_sample(u, [](double v) { return v; });
        worst = std::max(worst, d);
        ok = ok && d < crit;
    }
    return {ok, fmt::format("max KS D = {:.4f}, critical {:.4f}", worst, crit)};
}

Outcome ac3_copula() {
    auto config = load_config(testing::fixture_dir / "run.json");
    testing::TempDir dir("ac3");
    config.output_dir = dir.path();
    config.simulation.n_scenarios = 500;
    config.simulation.horizon_months = 12;
    config.simulation.inflow_source = InflowSource::Network;
    const auto data = load_run_data(config);
    const auto model = fit_model(config, data);
    const ReportOptions ro{config.validation.alpha, config.validation.band_level};
    const auto report = build_report(data.monthly, run_simulation(config, model).monthly, ro);

    auto ar = config;
    ar.simulation.inflow_source = InflowSource::Ar;
    const auto ar_report = build_report(data.monthly, run_simulation(ar, model).monthly, ro);

    const bool ok = report.pass_fraction >= 0.90 && report.mean_abs_corr_diff <= 0.1;
    return {ok, fmt::format("pass fraction {:.3f} over {} pairs, mean |dr| {:.4f}; with AR inflows as evidence: {:.3f}, "
                            "mean |dr| {:.4f} (informational)",
                            report.pass_fraction, report.pair_tests.size(), report.mean_abs_corr_diff,
                            ar_report.pass_fraction, ar_report.mean_abs_corr_diff)};
}

/// Local BIC by ordinary least squares in long double on centred columns.
double oracle_local(const Eigen::MatrixXd& z, std::size_t node, const std::vector<std::size_t>& parents) {
    using MatL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
    using VecL = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
    MatL zc = z.cast<long double>();
    for (Eigen::Index c = 0; c < zc.cols(); ++c) zc.col(c).array() -= zc.col(c).mean();
    const auto k = static_cast<Eigen::Index>(parents.size());
    MatL x(z.rows(), k);
    for (Eigen::Index j = 0; j < k; ++j) x.col(j) = zc.col(static_cast<Eigen::Index>(parents[static_cast<std::size_t>(j)]));
    VecL y = zc.col(static_cast<Eigen::Index>(node));
    long double rss = y.squaredNorm();
    if (k > 0) {
        const VecL beta = (x.transpose() * x).ldlt().solve(x.transpose() * y);
        rss = (y - x * beta).squaredNorm();
    }
    const long double n = static_cast<long double>(z.rows());
    return static_cast<double>(-0.5L * n * std::log(rss / n) - 0.5L * static_cast<long double>(k + 1) * std::log(n));
}

Outcome ac4_structure() {
    const std::size_t nodes = 6, n = 2000;
    Eigen::MatrixXd z(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(nodes));
    for (std::size_t c = 0; c < nodes; ++c) {
        const auto e = testing::normals(n, 4242, c);
        for (std::size_t r = 0; r < n; ++r)
            z(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                (c == 0 ? 0.0 : 0.9 * z(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c - 1))) + e[r];
    }
    NormalPanel p;
    for (std::size_t c = 0; c < nodes; ++c) p.stations.push_back({"N" + std::to_string(c + 1), StationKind::Wind, 1.0, false});
    p.index = month_range({1800, 1}, static_cast<int>(n));
    p.z = z;

    const auto learned = learn_structure(p, {6, 5, 42, true});
    std::set<std::pair<std::size_t, std::size_t>> skel, truth;
    for (auto [a, b] : learned.edges()) skel.emplace(std::min(a, b), std::max(a, b));
    for (std::size_t c = 1; c < nodes; ++c) truth.emplace(c - 1, c);

    Dag true_dag = Dag::empty(p.stations, 6);
    for (std::size_t c = 1; c < nodes; ++c) true_dag.parents[c] = {c - 1};
    const double learned_bic = total_bic(p, learned), true_bic = total_bic(p, true_dag);

    // Exhaustive scoring of every DAG on each window of three consecutive nodes.
    bool windows_ok = true;
    for (std::size_t w = 0; w + 2 < nodes; ++w) {
        Eigen::MatrixXd sub = z.middleCols(static_cast<Eigen::Index>(w), 3);
        const std::array<std::pair<std::size_t, std::size_t>, 3> pairs{{{0, 1}, {0, 2}, {1, 2}}};
        double best = -1e300;
        std::set<std::pair<std::size_t, std::size_t>> best_skel;
        for (int code = 0; code < 27; ++code) {
            std::vector<std::vector<std::size_t>> pa(3);
            int c = code;
            std::set<std::pair<std::size_t, std::size_t>> sk;
            for (auto [a, b] : pairs) {
                if (c % 3 == 1) pa[b].push_back(a);
                if (c % 3 == 2) pa[a].push_back(b);
                if (c % 3 != 0) sk.emplace(a, b);
                c /= 3;
            }
            // 3-node cycles are the only cyclic configurations.
            const bool cyc = (code == 1 + 2 * 3 + 1 * 9) || (code == 2 + 1 * 3 + 2 * 9);
            if (cyc) continue;
            for (auto& v : pa) std::sort(v.begin(), v.end());
            double s = 0.0;
            for (std::size_t i = 0; i < 3; ++i) s += oracle_local(sub, i, pa[i]);
            if (s > best + 1e-9) {
                best = s;
                best_skel = sk;
            }
        }
        const std::set<std::pair<std::size_t, std::size_t>> chain{{0, 1}, {1, 2}};
        std::set<std::pair<std::size_t, std::size_t>> learned_sub;
        for (auto [a, b] : skel)
            if (a >= w && b <= w + 2) learned_sub.emplace(a - w, b - w);
        windows_ok = windows_ok && best_skel == chain && learned_sub == chain;
    }
    const bool ok = skel == truth && windows_ok && learned_bic >= true_bic - 1e-6;
    return {ok, fmt::format("skeleton {} ({} edges), windows {}, BIC learned {:.6f} vs true {:.6f}",
                            skel == truth ? "matches" : "differs", skel.size(), windows_ok ? "agree" : "disagree",
                            learned_bic, true_bic)};
}

std::size_t fitted_parameters(const HistoricalPanel& panel, std::size_t max_parents) {
    const auto z = forward(panel, fit_marginals(panel, 2048));
    return parameter_count(fit_regression(learn_structure(z, {max_parents, 5, 42, true}), z));
}

Outcome ac5_parameters() {
    const auto desk = fitted_parameters(desk_panel(), 3);
    const auto wide = make_copula_fixture({20, 30, 30, 1990, 3, 42});
    const auto wide_count = fitted_parameters(wide.monthly, 6);
    const bool ok = desk <= 32 && desk < full_count(8) && wide_count <= 350 && full_count(50) == 1275;
    return {ok, fmt::format("8 stations: {} <= 32 (full {}); 50 stations: {} <= 350 (full {}, {:.1f}%)", desk,
                            full_count(8), wide_count, full_count(50),
                            100.0 * static_cast<double>(wide_count) / static_cast<double>(full_count(50)))};
}

Outcome ac6_disagg() {
    const auto f = make_copula_fixture({4, 6, 30, 1990, 2, 42});
    const auto model = fit_disagg(std::make_shared<const HistoricalPanel>(make_hourly_generation(f, 42)));
    const std::size_t n_st = model.stations.size(), n_sc = 50;

    // Targets below min over years of (mean / peak) cannot clip whichever year is chosen.
    Eigen::MatrixXd bound(12, static_cast<Eigen::Index>(n_st));
    for (int m = 1; m <= 12; ++m)
        for (std::size_t c = 0; c < n_st; ++c) {
            double b = 1.0;
            for (int y : model.months[static_cast<std::size_t>(m - 1)].years) {
                const auto prof = model.profile(y, m, c);
                double mean = 0.0, peak = 0.0;
                for (double v : prof) {
                    mean += v;
                    peak = std::max(peak, v);
                }
                mean /= static_cast<double>(prof.size());
                if (peak > 0.0) b = std::min(b, mean / peak);
            }
            bound(m - 1, static_cast<Eigen::Index>(c)) = b;
        }

    ScenarioSet set;
    set.stations = model.stations;
    set.index = month_range({2031, 1}, 12);
    const auto u = testing::uniforms(n_sc * 12 * n_st, 606);
    for (std::size_t s = 0; s < n_sc; ++s) {
        Eigen::MatrixXd v(12, static_cast<Eigen::Index>(n_st));
        for (Eigen::Index t = 0; t < 12; ++t)
            for (Eigen::Index c = 0; c < static_cast<Eigen::Index>(n_st); ++c)
                v(t, c) = (0.05 + 0.95 * u[(s * 12 + static_cast<std::size_t>(t)) * n_st + static_cast<std::size_t>(c)]) *
                          bound(t, c);
        set.values.push_back(v);
    }
    const auto out = disaggregate(set, model);

    std::vector<std::size_t> offset{0};
    for (auto t : set.index) offset.push_back(offset.back() + static_cast<std::size_t>(year_month_of(t).hours()));
    double worst = 0.0;
    std::size_t clipped = 0;
    for (const auto& rec : out.clipping) {
        clipped += rec.clipped_hours;
        const auto t = static_cast<std::size_t>(year_month_of(rec.month).month - 1);
        const double mean = out.hourly.values[rec.scenario]
                                .col(static_cast<Eigen::Index>(rec.station))
                                .segment(static_cast<Eigen::Index>(offset[t]), static_cast<Eigen::Index>(offset[t + 1] - offset[t]))
                                .mean();
        const double target = set.values[rec.scenario](static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(rec.station));
        worst = std::max(worst, std::fabs(mean - target) / target);
    }

    std::size_t mismatches = 0;
    for (const auto& p : out.provenance) {
        const auto t = static_cast<std::size_t>(year_month_of(p.month).month - 1);
        const auto& dm = model.months[t];
        const Eigen::VectorXd x = set.values[p.scenario].row(static_cast<Eigen::Index>(t)).transpose();
        std::size_t best = 0;
        double best_d = 1e300;
        for (std::size_t y = 0; y < dm.years.size(); ++y) {
            const Eigen::VectorXd diff = (x - dm.cf.row(static_cast<Eigen::Index>(y)).transpose());
            const double d = (dm.loadings.transpose() * diff).squaredNorm();
            if (d < best_d) {
                best_d = d;
                best = y;
            }
        }
        mismatches += p.selected_year != dm.years[best];
    }
    const bool ok = clipped == 0 && worst <= 1e-9 && mismatches == 0;
    return {ok, fmt::format("{} (scenario, month) pairs: max relative mean error {:.2g}, clipped hours {}, "
                            "selection mismatches {}",
                            out.provenance.size(), worst, clipped, mismatches)};
}

Outcome ac7_fisher() {
    using mp = boost::multiprecision::cpp_bin_float_50;
    const auto u = testing::uniforms(4000, 707);
    double worst_t = 0.0, worst_p = 0.0;
    for (std::size_t i = 0; i < 1000; ++i) {
        const double r1 = 1.998 * u[4 * i] - 0.999, r2 = 1.998 * u[4 * i + 1] - 0.999;
        const long n1 = 4 + static_cast<long>(u[4 * i + 2] * 100000), n2 = 4 + static_cast<long>(u[4 * i + 3] * 100000);
        const auto f = fisher_z_pair(r1, n1, r2, n2);
        const mp a1 = boost::multiprecision::log((1 + mp(r1)) / (1 - mp(r1))) / 2;
        const mp a2 = boost::multiprecision::log((1 + mp(r2)) / (1 - mp(r2))) / 2;
        const mp t = (a1 - a2) / boost::multiprecision::sqrt(mp(1) / mp(n1 - 3) + mp(1) / mp(n2 - 3));
        const mp p = boost::math::erfc(boost::multiprecision::abs(t) / boost::multiprecision::sqrt(mp(2)));
        worst_t = std::max(worst_t, std::fabs(f.statistic - static_cast<double>(t)) / std::max(1.0, std::fabs(f.statistic)));
        worst_p = std::max(worst_p, std::fabs(f.p_value - static_cast<double>(p)));
    }
    return {worst_t <= 1e-12 && worst_p <= 1e-12,
            fmt::format("1000 tuples: max T error {:.2g} (relative above 1), max p error {:.2g}", worst_t, worst_p)};
}

std::map<std::string, std::string> snapshot(const std::filesystem::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : std::filesystem::recursive_directory_iterator(dir))
        if (e.is_regular_file()) out[std::filesystem::relative(e.path(), dir).string()] = testing::read_text(e.path());
    return out;
}

Outcome ac8_determinism() {
    testing::TempDir dir("ac8");
    auto j = nlohmann::json::parse(testing::read_text(testing::fixture_dir / "run.json"));
    j["data"] = (testing::fixture_dir / "data.csv").string();
    j["metadata"] = (testing::fixture_dir / "metadata.csv").string();
    j["output_dir"] = (dir.path() / "out").string();
    testing::write_text(dir / "run.json", j.dump(2));
    const auto cfg = dir / "run.json", model = dir.path() / "out" / "model.json";

    std::vector<std::map<std::string, std::string>> runs;
    for (int k = 0; k < 2; ++k) {
        std::filesystem::remove_all(dir.path() / "out");
        if (run_cli("fit --config " + q(cfg)) != 0) return {false, "fit failed"};
        if (run_cli("simulate --config " + q(cfg) + " --model " + q(model)) != 0) return {false, "simulate failed"};
        runs.push_back(snapshot(dir.path() / "out"));
    }
    std::size_t bytes = 0;
    for (const auto& [name, text] : runs[0]) bytes += text.size();
    const bool ok = runs[0] == runs[1] && runs[0].count("model.json") && runs[0].count("scenarios_monthly.csv");
    return {ok, fmt::format("{} files, {} bytes, {}", runs[0].size(), bytes, runs[0] == runs[1] ? "identical" : "differ")};
}

Outcome ac9_end_to_end(double& seconds) {
    testing::TempDir dir("ac9");
    const auto t0 = std::chrono::steady_clock::now();
    if (run_cli("make-fixture --set hourly10 --seed 42 --out " + q(dir.path())) != 0) return {false, "make-fixture failed"};
    const auto root = dir.path() / "hourly10";
    const auto cfg = root / "run.json", out = root / "out";
    if (run_cli("fit --config " + q(cfg)) != 0) return {false, "fit failed"};
    if (run_cli("simulate --config " + q(cfg) + " --model " + q(out / "model.json")) != 0) return {false, "simulate failed"};
    if (run_cli("validate --config " + q(cfg) + " --model " + q(out / "model.json") + " --scenarios " + q(out)) != 0)
        return {false, "validate failed"};
    seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const auto config = load_config(cfg);
    const auto meta = load_metadata(root / "metadata.csv");
    std::size_t cf_stations = 0;
    for (const auto& s : meta) cf_stations += s.unit() == Unit::CapacityFactor;
    const auto months = month_range(config.simulation.horizon_start, config.simulation.horizon_months);
    const auto hours = hours_of(months).size();
    std::FILE* fh = std::fopen((out / "scenarios_hourly.csv").string().c_str(), "rb");
    std::size_t lines = 0;
    if (fh) {
        std::vector<char> buf(1 << 20);
        std::size_t got;
        while ((got = std::fread(buf.data(), 1, buf.size(), fh)) > 0) lines += static_cast<std::size_t>(std::count(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(got), '\n'));
        std::fclose(fh);
    }
    const auto expected = 1 + config.simulation.n_scenarios * hours * cf_stations;
    const auto report = nlohmann::json::parse(testing::read_text(out / "report.json"));
    const bool ok = meta.size() == 10 && config.simulation.n_scenarios == 100 && config.simulation.horizon_months == 12 &&
                    lines == expected && std::filesystem::exists(out / "provenance.csv");
    return {ok, fmt::format("{} stations, {} scenarios x {} months, {} hourly rows (expected {}), validation pass "
                            "fraction {:.3f}",
                            meta.size(), config.simulation.n_scenarios, config.simulation.horizon_months, lines - 1,
                            expected - 1, report.at("pass_fraction").get<double>())};
}

}  // namespace

int main() {
    int failures = 0;
    auto report = [&](const char* id, const char* name, double limit, const std::function<Outcome(double&)>& fn) {
        Outcome o;
        double seconds = 0.0;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            o = fn(seconds);
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (seconds == 0.0) seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = limit <= 0.0 || seconds < limit;
        const bool pass = o.pass && in_time;
        failures += !pass;
        const std::string timing =
            limit > 0.0 ? fmt::format("{:.2f} s, limit {:.0f} s", seconds, limit) : fmt::format("{:.2f} s", seconds);
        fmt::print("{} {} {}: {} [{}]\n", id, pass ? "PASS" : "FAIL", name, o.detail, timing);
        std::fflush(stdout);
    };
    auto plain = [](Outcome (*f)()) { return [f](double&) { return f(); }; };

    report("AC1", "round-trip fidelity", 1.0, plain(ac1_round_trip));
    report("AC2", "PIT uniformity", 5.0, plain(ac2_pit));
    report("AC3", "copula recovery", 30.0, plain(ac3_copula));
    report("AC4", "structure recovery", 10.0, plain(ac4_structure));
    report("AC5", "parameter reduction", 60.0, plain(ac5_parameters));
    report("AC6", "disaggregation mean preservation", 10.0, plain(ac6_disagg));
    report("AC7", "Fisher oracle", 0.0, plain(ac7_fisher));
    report("AC8", "determinism", 0.0, plain(ac8_determinism));
    report("AC9", "end-to-end desk run", 60.0, ac9_end_to_end);
    return failures == 0 ? 0 : 1;
}
