#include "scengen/marginal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "scengen/error.hpp"
#include "scengen/normal.hpp"

namespace scengen {

namespace {

// Kernels further than this many bandwidths away contribute 0 or 1 to the CDF
// below double resolution (Phi(-10) ~ 7.6e-24).
constexpr double kWindow = 10.0;
// Grid half-margin beyond the sample range when an edge is open; Phi(-8) ~ 6e-16.
constexpr double kGridMargin = 8.0;

double quantile_type7(const std::vector<double>& sorted, double p) {
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

double silverman_bandwidth(std::span<const double> samples) {
    const auto n = static_cast<double>(samples.size());
    if (samples.size() < 2) throw InsufficientDataError("bandwidth needs at least 2 samples");
    const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : samples) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    const double iqr = quantile_type7(sorted, 0.75) - quantile_type7(sorted, 0.25);
    const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
    return 0.9 * spread * std::pow(n, -0.2);
}

MarginalModel::MarginalModel(std::vector<double> samples, double bandwidth, Interval support,
                             std::size_t grid_size)
    : samples_(std::move(samples)), bandwidth_(bandwidth), support_(support), grid_size_(grid_size) {
    if (samples_.empty()) throw InsufficientDataError("marginal model needs samples");
    if (!(bandwidth_ > 0.0) || !std::isfinite(bandwidth_))
        throw ArgumentError(fmt::format("bandwidth must be positive, got {}", bandwidth_));
    if (!(support_.lo < support_.hi)) throw ArgumentError("support must satisfy lo < hi");
    if (grid_size_ < 1024) throw ArgumentError(fmt::format("grid size must be >= 1024, got {}", grid_size_));
    build();
}

MarginalModel MarginalModel::constant(double value) {
    MarginalModel m;
    m.samples_ = {value};
    m.constant_ = true;
    m.grid_x_ = {value};
    m.grid_f_ = {0.5};
    return m;
}

void MarginalModel::build() {
    std::sort(samples_.begin(), samples_.end());
    for (double x : samples_)
        if (x < support_.lo || x > support_.hi)
            throw ArgumentError(fmt::format("sample {} outside support [{}, {}]", x, support_.lo, support_.hi));

    centres_.clear();
    centres_.push_back(samples_);
    if (std::isfinite(support_.lo)) {
        std::vector<double> mirror(samples_.rbegin(), samples_.rend());
        for (double& c : mirror) c = 2.0 * support_.lo - c;
        centres_.push_back(std::move(mirror));
    }
    if (std::isfinite(support_.hi)) {
        std::vector<double> mirror(samples_.rbegin(), samples_.rend());
        for (double& c : mirror) c = 2.0 * support_.hi - c;
        centres_.push_back(std::move(mirror));
    }

    double total = 0.0;
    for (const auto& c : centres_) total += static_cast<double>(c.size());
    offset_ = std::isfinite(support_.lo) ? kernel_mass_below(support_.lo) : 0.0;
    norm_ = (std::isfinite(support_.hi) ? kernel_mass_below(support_.hi) : total) - offset_;

    const double a = std::max(support_.lo, samples_.front() - kGridMargin * bandwidth_);
    const double b = std::min(support_.hi, samples_.back() + kGridMargin * bandwidth_);
    grid_x_.clear();
    grid_f_.clear();
    const double step = (b - a) / static_cast<double>(grid_size_ - 1);
    for (std::size_t i = 0; i < grid_size_; ++i) {
        const double x = i + 1 == grid_size_ ? b : a + step * static_cast<double>(i);
        const double f = raw_cdf(x);
        if (!grid_f_.empty() && f <= grid_f_.back()) {
            if (i + 1 == grid_size_) {  // keep the closing edge
                grid_x_.back() = x;
                grid_f_.back() = f;
            }
            continue;
        }
        grid_x_.push_back(x);
        grid_f_.push_back(f);
    }
    // Saturated tails collapse; refill the interior by bisection.
    for (int pass = 0; pass < 8 && grid_x_.size() < grid_size_; ++pass) {
        std::size_t deficit = grid_size_ - grid_x_.size();
        std::vector<double> nx{grid_x_.front()}, nf{grid_f_.front()};
        for (std::size_t i = 1; i < grid_x_.size(); ++i) {
            if (deficit > 0) {
                const double xm = 0.5 * (grid_x_[i - 1] + grid_x_[i]);
                const double fm = raw_cdf(xm);
                if (fm > grid_f_[i - 1] && fm < grid_f_[i]) {
                    nx.push_back(xm);
                    nf.push_back(fm);
                    --deficit;
                }
            }
            nx.push_back(grid_x_[i]);
            nf.push_back(grid_f_[i]);
        }
        grid_x_ = std::move(nx);
        grid_f_ = std::move(nf);
    }
}

double MarginalModel::kernel_mass_below(double x) const {
    double mass = 0.0;
    const double h = bandwidth_;
    for (const auto& c : centres_) {
        auto first = std::lower_bound(c.begin(), c.end(), x - kWindow * h);
        auto last = std::upper_bound(first, c.end(), x + kWindow * h);
        mass += static_cast<double>(first - c.begin());
        for (auto it = first; it != last; ++it) mass += normal_cdf((x - *it) / h);
    }
    return mass;
}

double MarginalModel::raw_cdf(double x) const {
    if (constant_) {
        const double v = samples_.front();
        return x < v ? 0.0 : (x > v ? 1.0 : 0.5);
    }
    if (x <= support_.lo) return 0.0;
    if (x >= support_.hi) return 1.0;
    return std::clamp((kernel_mass_below(x) - offset_) / norm_, 0.0, 1.0);
}

double MarginalModel::cdf(double x) const {
    return std::clamp(raw_cdf(x), kCdfEpsilon, 1.0 - kCdfEpsilon);
}

double MarginalModel::pdf(double x) const {
    if (constant_ || x < support_.lo || x > support_.hi) return 0.0;
    const double h = bandwidth_;
    double sum = 0.0;
    for (const auto& c : centres_) {
        auto first = std::lower_bound(c.begin(), c.end(), x - kWindow * h);
        auto last = std::upper_bound(first, c.end(), x + kWindow * h);
        for (auto it = first; it != last; ++it) sum += normal_pdf((x - *it) / h);
    }
    return sum / (h * norm_);
}

double MarginalModel::quantile(double u) const {
    if (constant_) return samples_.front();
    u = std::clamp(u, kCdfEpsilon, 1.0 - kCdfEpsilon);
    if (u <= grid_f_.front()) return grid_x_.front();
    if (u >= grid_f_.back()) return grid_x_.back();

    const auto k = static_cast<std::size_t>(std::upper_bound(grid_f_.begin(), grid_f_.end(), u) - grid_f_.begin());
    double lo = grid_x_[k - 1], hi = grid_x_[k];
    double f_lo = grid_f_[k - 1], f_hi = grid_f_[k];
    double x = lo + (hi - lo) * (u - f_lo) / (f_hi - f_lo);

    // Newton steps safeguarded by the bracket; falls back to bisection.
    for (int iter = 0; iter < 200; ++iter) {
        const double g = raw_cdf(x) - u;
        if (std::fabs(g) <= 1e-13) return x;
        if (g < 0.0)
            lo = x;
        else
            hi = x;
        if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(std::fabs(x), 1.0)) break;
        const double d = pdf(x);
        double next = d > 0.0 ? x - g / d : lo - 1.0;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        x = next;
    }
    return x;
}

MarginalModel fit_kde(std::span<const double> samples, const KdeOptions& options) {
    if (samples.size() < 30)
        throw InsufficientDataError(fmt::format("KDE needs at least 30 samples, got {}", samples.size()));
    for (double x : samples)
        if (!std::isfinite(x)) throw ArgumentError("KDE samples must be finite");
    const auto [mn, mx] = std::minmax_element(samples.begin(), samples.end());
    if (*mn == *mx) throw DegenerateMarginalError(fmt::format("all {} samples equal {}", samples.size(), *mn));

    const double h = options.bandwidth ? *options.bandwidth : silverman_bandwidth(samples);
    return {std::vector<double>(samples.begin(), samples.end()), h, options.support.value_or(Interval{}),
            options.grid_size};
}

}  // namespace scengen
