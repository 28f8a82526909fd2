#pragma once

namespace scengen {

inline constexpr double kInvSqrt2 = 0.70710678118654752440;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;

/// Standard normal CDF via erfc; absolute error at the level of double rounding.
double normal_cdf(double z);

double normal_pdf(double z);

/// Standard normal quantile (Wichura's AS 241, PPND16). Relative accuracy about
/// 1e-16 on (0, 1); returns -inf/+inf at 0/1 and NaN outside [0, 1].
double normal_quantile(double p);

}  // namespace scengen
