#include <catch_amalgamated.hpp>

#include <cmath>

#include <boost/math/special_functions/erf.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include "scengen/error.hpp"
#include "scengen/validate.hpp"
#include "support.hpp"

using namespace scengen;
using mp = boost::multiprecision::cpp_bin_float_50;

namespace {

mp mp_atanh(const mp& r) { return boost::multiprecision::log((1 + r) / (1 - r)) / 2; }

std::pair<mp, mp> mp_fisher(double r1, long n1, double r2, long n2) {
    const mp t = (mp_atanh(mp(r1)) - mp_atanh(mp(r2))) /
                 boost::multiprecision::sqrt(mp(1) / mp(n1 - 3) + mp(1) / mp(n2 - 3));
    const mp p = boost::math::erfc(boost::multiprecision::abs(t) / boost::multiprecision::sqrt(mp(2)));
    return {t, p};
}

const HistoricalPanel& fixture() {
    static const HistoricalPanel p = load_panel(testing::fixture_dir / "data.csv", testing::fixture_dir / "metadata.csv");
    return p;
}

/// Scenarios built from historical rows drawn with replacement.
ScenarioSet resampled(const HistoricalPanel& hist, std::size_t n_sc, std::uint64_t seed) {
    ScenarioSet s;
    s.stations = hist.stations();
    s.index = month_range({2020, 1}, 12);
    for (std::size_t k = 0; k < n_sc; ++k) {
        Eigen::MatrixXd v(12, static_cast<Eigen::Index>(hist.cols()));
        for (Eigen::Index t = 0; t < 12; ++t) {
            const auto r = scengen::rng::below(scengen::rng::at(seed, {k, static_cast<std::uint64_t>(t)}), hist.rows() / 12);
            v.row(t) = hist.values().row(static_cast<Eigen::Index>(r * 12 + static_cast<std::size_t>(t)));
        }
        s.values.push_back(v);
    }
    return s;
}

}  // namespace

TEST_CASE("Fisher Z: identical correlations") {
    for (long n : {4L, 10L, 1000L}) {
        const auto f = fisher_z_pair(0.37, n, 0.37, n + 5);
        CHECK(f.statistic == 0.0);
        CHECK(f.p_value == 1.0);
    }
}

TEST_CASE("Fisher Z: frozen and high-precision values") {
    const auto f = fisher_z_pair(0.5, 103, 0.3, 103);
    CHECK(std::fabs(f.statistic - 1.695546885638501007525) <= 1e-12);
    CHECK(std::fabs(f.p_value - 0.08997172386785005513449) <= 1e-12);
    const auto [t, p] = mp_fisher(0.5, 103, 0.3, 103);
    CHECK(std::fabs(f.statistic - static_cast<double>(t)) <= 1e-12);
    CHECK(std::fabs(f.p_value - static_cast<double>(p)) <= 1e-12);

    const auto u = testing::uniforms(800, 12);
    for (std::size_t i = 0; i < 200; ++i) {
        const double r1 = 1.98 * u[4 * i] - 0.99, r2 = 1.98 * u[4 * i + 1] - 0.99;
        const long n1 = 4 + static_cast<long>(u[4 * i + 2] * 5000), n2 = 4 + static_cast<long>(u[4 * i + 3] * 5000);
        const auto g = fisher_z_pair(r1, n1, r2, n2);
        const auto [mt, mpv] = mp_fisher(r1, n1, r2, n2);
        CHECK(std::fabs(g.statistic - static_cast<double>(mt)) <= 1e-12 * std::max(1.0, std::fabs(g.statistic)));
        CHECK(std::fabs(g.p_value - static_cast<double>(mpv)) <= 1e-12);
    }
}

TEST_CASE("Fisher Z: p decreases along a doubling ladder of n") {
    double prev = 1.0;
    for (long n = 8; n <= (1L << 20); n *= 2) {
        const auto f = fisher_z_pair(0.42, n, 0.40, n);
        CHECK(f.p_value < prev);
        prev = f.p_value;
    }
    CHECK(prev < 1e-6);
}

TEST_CASE("Fisher Z: antisymmetry and argument checks") {
    const auto a = fisher_z_pair(0.8, 50, -0.1, 200);
    const auto b = fisher_z_pair(-0.1, 200, 0.8, 50);
    CHECK(a.statistic == -b.statistic);
    CHECK(a.p_value == b.p_value);
    CHECK_THROWS_AS(fisher_z_pair(1.0, 50, 0.1, 50), ArgumentError);
    CHECK_THROWS_AS(fisher_z_pair(0.1, 50, -1.2, 50), ArgumentError);
    CHECK_THROWS_AS(fisher_z_pair(0.1, 3, 0.1, 50), ArgumentError);
}

TEST_CASE("correlation: self, negated and constant columns") {
    const auto x = testing::normals(100, 3);
    Eigen::MatrixXd d(100, 3);
    for (Eigen::Index r = 0; r < 100; ++r) {
        d(r, 0) = x[static_cast<std::size_t>(r)];
        d(r, 1) = -x[static_cast<std::size_t>(r)];
        d(r, 2) = 2.0;
    }
    const auto c = correlation_matrix(d);
    CHECK(c.r(0, 0) == 1.0);
    CHECK(c.r(0, 1) == Catch::Approx(-1.0).margin(1e-15));
    CHECK(std::isnan(c.r(0, 2)));
    CHECK(c.n(0, 1) == 100);

    Eigen::MatrixXd sparse = d.leftCols(2);
    for (Eigen::Index r = 3; r < 100; ++r) sparse(r, 1) = std::nan("");
    const auto cs = correlation_matrix(sparse);
    CHECK(std::isnan(cs.r(0, 1)));
    CHECK(cs.n(0, 1) == 3);
}

TEST_CASE("correlation: fixture matches a two-pass oracle") {
    const auto& p = fixture();
    const auto c = correlation_matrix(p);
    const auto& v = p.values();
    const auto n = v.rows();
    for (Eigen::Index a = 0; a < v.cols(); ++a)
        for (Eigen::Index b = 0; b < v.cols(); ++b) {
            long double ma = 0, mb = 0;
            for (Eigen::Index r = 0; r < n; ++r) {
                ma += v(r, a);
                mb += v(r, b);
            }
            ma /= n;
            mb /= n;
            long double sab = 0, saa = 0, sbb = 0;
            for (Eigen::Index r = 0; r < n; ++r) {
                sab += (v(r, a) - ma) * (v(r, b) - mb);
                saa += (v(r, a) - ma) * (v(r, a) - ma);
                sbb += (v(r, b) - mb) * (v(r, b) - mb);
            }
            CHECK(std::fabs(c.r(a, b) - static_cast<double>(sab / std::sqrt(saa * sbb))) <= 1e-12);
            CHECK(c.r(a, b) == c.r(b, a));
            CHECK(std::fabs(c.r(a, b)) <= 1.0);
        }
    CHECK(c.r == correlation_matrix(v, false).r);
}

TEST_CASE("correlation of a scenario set pools all rows") {
    const auto s = resampled(fixture(), 30, 4);
    const auto pooled = pooled_rows(s);
    CHECK(pooled.rows() == 360);
    CHECK(pooled.row(13) == s.values[1].row(1));
    CHECK(correlation_matrix(s).r == correlation_matrix(pooled).r);
}

TEST_CASE("report on resampled history passes at the nominal rate") {
    const auto& hist = fixture();
    double total = 0.0;
    const int seeds = 5;
    for (int k = 0; k < seeds; ++k) {
        const auto rep = build_report(hist, resampled(hist, 100, static_cast<std::uint64_t>(100 + k)), {0.10, 0.90});
        total += rep.pass_fraction;
    }
    CHECK(total / seeds >= 1.0 - 0.10 - 0.05);
}

TEST_CASE("report structure and invariants") {
    const auto& hist = fixture();
    const auto rep = build_report(hist, resampled(hist, 50, 7));
    // 3 hydro + 5 generation: 15 hydro-generation and 10 generation pairs, 3 hydro-hydro.
    CHECK(rep.pair_tests.size() == 25);
    CHECK(rep.hydro_pairs.size() == 3);
    std::size_t passed = 0;
    double diff = 0.0;
    for (const auto& p : rep.pair_tests) {
        CHECK(p.p_value >= 0.0);
        CHECK(p.p_value <= 1.0);
        CHECK(p.pass == (p.p_value > rep.alpha));
        CHECK(p.n_hist == 360);
        CHECK(p.n_synth == 600);
        passed += p.pass;
        diff += std::fabs(p.r_synth - p.r_hist);
    }
    CHECK(rep.pass_fraction == static_cast<double>(passed) / 25.0);
    CHECK(rep.mean_abs_corr_diff == Catch::Approx(diff / 25.0).epsilon(1e-12));
    CHECK(rep.pdf_distances.size() == 8);
    CHECK(rep.bands.size() == 8 * 12);
    for (const auto& b : rep.bands) {
        CHECK(b.hist_lo <= b.hist_mean);
        CHECK(b.hist_mean <= b.hist_hi);
        CHECK(b.synth_lo <= b.synth_hi);
    }
}

TEST_CASE("alpha = 1 rejects every pair") {
    const auto& hist = fixture();
    const auto rep = build_report(hist, resampled(hist, 20, 8), {1.0, 0.9});
    CHECK(rep.pass_fraction == 0.0);
}

TEST_CASE("disjoint station sets are an argument error") {
    const auto& hist = fixture();
    auto s = resampled(hist, 5, 9);
    for (auto& st : s.stations) st.id += "_x";
    CHECK_THROWS_AS(build_report(hist, s), ArgumentError);
}

TEST_CASE("KS helpers and empirical quantiles") {
    CHECK(ks_two_sample({1, 2, 3}, {1, 2, 3}) == 0.0);
    CHECK(ks_two_sample({1, 2, 3}, {4, 5, 6}) == 1.0);
    CHECK(ks_one_sample({0.5}, [](double x) { return x; }) == 0.5);
    CHECK(ks_critical(100, 0.05) == Catch::Approx(0.1358).margin(1e-4));
    CHECK(empirical_quantile({1, 2, 3, 4, 5}, 0.5) == 3.0);
    CHECK(empirical_quantile({1, 2, 3, 4}, 0.25) == 1.75);
}

TEST_CASE("report files") {
    const auto& hist = fixture();
    const auto rep = build_report(hist, resampled(hist, 20, 10));
    testing::TempDir dir("report");
    write_report(rep, dir.path());
    const auto fh = testing::read_text(dir / "fisher_hist.csv");
    CHECK(fh.rfind("bin_lo,bin_hi,count\n", 0) == 0);
    const auto sc = testing::read_text(dir / "corr_scatter.csv");
    CHECK(sc.rfind("station_a,station_b,r_hist,r_synth\n", 0) == 0);
    CHECK(std::count(sc.begin(), sc.end(), '\n') == 1 + 25 + 3);
    const auto bands = testing::read_text(dir / "bands.csv");
    CHECK(bands.rfind("station,month,hist_mean,hist_lo,hist_hi,synth_mean,synth_lo,synth_hi\n", 0) == 0);
    CHECK(std::count(bands.begin(), bands.end(), '\n') == 1 + 96);
    const auto j = nlohmann::json::parse(testing::read_text(dir / "report.json"));
    CHECK(j.at("pass_fraction").get<double>() == rep.pass_fraction);
    CHECK(j.at("pair_tests").size() == 25);

    // Histogram counts add up to the pairs behind pass_fraction.
    std::istringstream in(fh);
    std::string line;
    std::getline(in, line);
    long count = 0;
    while (std::getline(in, line)) count += std::stol(line.substr(line.rfind(',') + 1));
    CHECK(count == 25);
}
