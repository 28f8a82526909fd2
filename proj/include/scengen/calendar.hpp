#pragma once

#include <chrono>
#include <compare>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace scengen {

/// UTC instant with one-second precision.
using Timestamp = std::chrono::sys_seconds;

enum class Resolution { Hourly, Monthly };

/// A civil calendar month (UTC).
struct YearMonth {
    int year = 1970;
    int month = 1;  // 1..12

    auto operator<=>(const YearMonth&) const = default;

    Timestamp start() const;
    YearMonth next(int months = 1) const;
    int hours() const;
    /// Months elapsed since `other` (negative if this precedes it).
    int minus(const YearMonth& other) const { return (year - other.year) * 12 + (month - other.month); }
    std::string str() const;  // "YYYY-MM"
};

YearMonth year_month_of(Timestamp t);

/// Accepts "YYYY-MM", "YYYY-MM-DD", "YYYY-MM-DD[T ]HH[:MM[:SS]]" with optional "Z" or "+00:00".
std::optional<Timestamp> parse_timestamp(std::string_view text);

/// Hourly stamps are written as "YYYY-MM-DDTHH:MM:SSZ"; monthly stamps as "YYYY-MM-DD".
std::string format_timestamp(Timestamp t, Resolution resolution);

/// `count` consecutive month starts beginning at `first`.
std::vector<Timestamp> month_range(YearMonth first, int count);

/// Every hour of the given months, in order.
std::vector<Timestamp> hours_of(const std::vector<Timestamp>& months);

}  // namespace scengen
