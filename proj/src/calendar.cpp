#include "scengen/calendar.hpp"

#include <charconv>

#include <fmt/format.h>

namespace scengen {

namespace {

using namespace std::chrono;

bool read_int(std::string_view& s, std::size_t digits, int& out) {
    if (s.size() < digits) return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + digits, out);
    if (ec != std::errc{} || ptr != s.data() + digits) return false;
    s.remove_prefix(digits);
    return true;
}

bool eat(std::string_view& s, char c) {
    if (s.empty() || s.front() != c) return false;
    s.remove_prefix(1);
    return true;
}

}  // namespace

Timestamp YearMonth::start() const {
    return Timestamp{sys_days{std::chrono::year{year} / std::chrono::month{static_cast<unsigned>(month)} / 1}};
}

YearMonth YearMonth::next(int months) const {
    int idx = year * 12 + (month - 1) + months;
    int y = idx >= 0 ? idx / 12 : (idx - 11) / 12;
    return {y, idx - y * 12 + 1};
}

int YearMonth::hours() const {
    auto d = (floor<days>(next().start()) - floor<days>(start())).count();
    return static_cast<int>(d) * 24;
}

std::string YearMonth::str() const { return fmt::format("{:04d}-{:02d}", year, month); }

YearMonth year_month_of(Timestamp t) {
    year_month_day ymd{floor<days>(t)};
    return {static_cast<int>(ymd.year()), static_cast<int>(static_cast<unsigned>(ymd.month()))};
}

std::optional<Timestamp> parse_timestamp(std::string_view s) {
    int y = 0, mo = 0, d = 1, h = 0, mi = 0, se = 0;
    if (!read_int(s, 4, y) || !eat(s, '-') || !read_int(s, 2, mo)) return std::nullopt;
    if (eat(s, '-')) {
        if (!read_int(s, 2, d)) return std::nullopt;
        if (eat(s, 'T') || eat(s, ' ')) {
            if (!read_int(s, 2, h)) return std::nullopt;
            if (eat(s, ':')) {
                if (!read_int(s, 2, mi)) return std::nullopt;
                if (eat(s, ':') && !read_int(s, 2, se)) return std::nullopt;
            }
        }
    }
    if (s == "Z" || s == "+00:00") s = {};
    if (!s.empty()) return std::nullopt;

    year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h > 23 || mi > 59 || se > 59) return std::nullopt;
    return Timestamp{sys_days{ymd}} + hours{h} + minutes{mi} + seconds{se};
}

std::string format_timestamp(Timestamp t, Resolution resolution) {
    auto day_point = floor<days>(t);
    year_month_day ymd{day_point};
    const int y = static_cast<int>(ymd.year());
    const unsigned m = static_cast<unsigned>(ymd.month());
    const unsigned d = static_cast<unsigned>(ymd.day());
    if (resolution == Resolution::Monthly) return fmt::format("{:04d}-{:02d}-{:02d}", y, m, d);
    hh_mm_ss hms{t - day_point};
    return fmt::format("{:04d}-{:02d}-{:02d}T{:02d}:{:02d}:{:02d}Z", y, m, d, hms.hours().count(),
                       hms.minutes().count(), hms.seconds().count());
}

std::vector<Timestamp> month_range(YearMonth first, int count) {
    std::vector<Timestamp> out;
    out.reserve(static_cast<std::size_t>(std::max(count, 0)));
    for (int i = 0; i < count; ++i) out.push_back(first.next(i).start());
    return out;
}

std::vector<Timestamp> hours_of(const std::vector<Timestamp>& months) {
    std::vector<Timestamp> out;
    for (auto m : months) {
        const int n = year_month_of(m).hours();
        for (int h = 0; h < n; ++h) out.push_back(m + hours{h});
    }
    return out;
}

}  // namespace scengen
