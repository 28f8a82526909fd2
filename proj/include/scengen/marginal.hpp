#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace scengen {

/// Tail clamp applied by MarginalModel::cdf so the normal quantile stays finite.
inline constexpr double kCdfEpsilon = 1e-9;

/// Closed support interval; either end may be infinite.
struct Interval {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();

    bool bounded() const { return lo > -std::numeric_limits<double>::infinity() ||
                                  hi < std::numeric_limits<double>::infinity(); }
    bool operator==(const Interval&) const = default;
};

struct KdeOptions {
    std::optional<Interval> support;
    std::size_t grid_size = 2048;
    std::optional<double> bandwidth;  // overrides the rule-of-thumb bandwidth
};

/// Silverman's rule of thumb, 0.9 * min(sd, IQR / 1.34) * n^(-1/5). Falls back to
/// the standard deviation when the IQR is zero.
double silverman_bandwidth(std::span<const double> samples);

/// Gaussian-kernel density estimate of one variable, with boundary reflection at
/// finite support edges.
///
/// The CDF is the exact kernel mixture, renormalized to unit mass on the support;
/// a tabulated grid brackets the quantile search. Immutable after construction.
class MarginalModel {
public:
    /// Rebuilds a fitted model from its persisted parts; the grid is recomputed.
    MarginalModel(std::vector<double> samples, double bandwidth, Interval support, std::size_t grid_size);

    /// Point mass at `value`, used for stations whose history never varies.
    static MarginalModel constant(double value);

    bool is_constant() const noexcept { return constant_; }
    const std::vector<double>& samples() const noexcept { return samples_; }
    double bandwidth() const noexcept { return bandwidth_; }
    const Interval& support() const noexcept { return support_; }
    bool bounded() const noexcept { return support_.bounded(); }
    std::size_t grid_size() const noexcept { return grid_size_; }
    const std::vector<double>& grid_x() const noexcept { return grid_x_; }
    const std::vector<double>& grid_f() const noexcept { return grid_f_; }

    /// Unclamped mixture CDF: exactly 0 at or below a finite lower edge and 1 at or above a finite upper edge.
    double raw_cdf(double x) const;
    /// raw_cdf clamped to [kCdfEpsilon, 1 - kCdfEpsilon].
    double cdf(double x) const;
    double pdf(double x) const;
    /// x with |raw_cdf(x) - u| <= 1e-9 (u is clamped like cdf).
    double quantile(double u) const;

private:
    MarginalModel() = default;
    void build();
    double kernel_mass_below(double x) const;

    std::vector<double> samples_;  // sorted ascending
    double bandwidth_ = 0.0;
    Interval support_{};
    std::size_t grid_size_ = 0;
    bool constant_ = false;

    // Kernel centres: the samples plus their mirror images at finite edges, each ascending.
    std::vector<std::vector<double>> centres_;
    double offset_ = 0.0;  // kernel mass below support.lo
    double norm_ = 1.0;    // kernel mass inside the support
    std::vector<double> grid_x_;
    std::vector<double> grid_f_;
};

/// Fits a KDE. Requires at least 30 finite samples with nonzero variance.
MarginalModel fit_kde(std::span<const double> samples, const KdeOptions& options = {});

}  // namespace scengen
