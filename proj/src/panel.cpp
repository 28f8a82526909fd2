#include "scengen/panel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <unordered_map>

#include <fmt/format.h>
#include <fmt/os.h>

#include "csv.hpp"
#include "scengen/error.hpp"

namespace scengen {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool is_month_start(Timestamp t) {
    return year_month_of(t).start() == t;
}

}  // namespace

std::string_view to_string(StationKind kind) {
    switch (kind) {
        case StationKind::Hydro: return "hydro";
        case StationKind::Wind: return "wind";
        case StationKind::Csp: return "csp";
        case StationKind::Dgsp: return "dgsp";
        case StationKind::SmallHydro: return "small_hydro";
        case StationKind::Other: return "other";
    }
    return "other";
}

std::optional<StationKind> parse_station_kind(std::string_view text) {
    for (auto k : {StationKind::Hydro, StationKind::Wind, StationKind::Csp, StationKind::Dgsp,
                   StationKind::SmallHydro, StationKind::Other})
        if (to_string(k) == text) return k;
    return std::nullopt;
}

HistoricalPanel::HistoricalPanel(std::vector<StationMeta> stations, std::vector<Timestamp> index,
                                 Eigen::MatrixXd values, Resolution resolution)
    : stations_(std::move(stations)),
      index_(std::move(index)),
      values_(std::move(values)),
      resolution_(resolution) {
    if (static_cast<std::size_t>(values_.rows()) != index_.size() ||
        static_cast<std::size_t>(values_.cols()) != stations_.size())
        throw ArgumentError(fmt::format("panel shape {}x{} does not match {} timestamps x {} stations",
                                        values_.rows(), values_.cols(), index_.size(),
                                        stations_.size()));

    std::set<std::string_view> ids;
    for (const auto& s : stations_)
        if (!ids.insert(s.id).second) throw DuplicateError("duplicate station id '" + s.id + "'");

    for (std::size_t r = 0; r < index_.size(); ++r) {
        const bool aligned = resolution_ == Resolution::Hourly
                                 ? index_[r].time_since_epoch() % std::chrono::hours{1} == std::chrono::seconds{0}
                                 : is_month_start(index_[r]);
        if (!aligned)
            throw CoverageError("timestamp " + format_timestamp(index_[r], Resolution::Hourly) +
                                " is not aligned to the panel resolution");
        if (r == 0) continue;
        const bool step_ok = resolution_ == Resolution::Hourly
                                 ? index_[r] - index_[r - 1] == std::chrono::hours{1}
                                 : year_month_of(index_[r]) == year_month_of(index_[r - 1]).next();
        if (!step_ok)
            throw CoverageError("index is not a uniform " +
                                std::string(resolution_ == Resolution::Hourly ? "hourly" : "monthly") +
                                " sequence at " + format_timestamp(index_[r], resolution_));
    }

    for (std::size_t c = 0; c < stations_.size(); ++c) {
        const auto& st = stations_[c];
        bool started = false, ended = false;
        for (std::size_t r = 0; r < index_.size(); ++r) {
            const double v = values_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
            if (std::isnan(v)) {
                if (started) ended = true;
                continue;
            }
            if (ended)
                throw CoverageError("station '" + st.id + "' has a gap before " +
                                    format_timestamp(index_[r], resolution_));
            started = true;
            const bool ok = std::isfinite(v) &&
                            (st.unit() == Unit::Volume ? v >= 0.0 : (v >= 0.0 && v <= 1.0));
            if (!ok)
                throw RangeError(fmt::format("station '{}' at {}: value {} outside {}", st.id,
                                             format_timestamp(index_[r], resolution_), v,
                                             st.unit() == Unit::Volume ? "[0, inf)" : "[0, 1]"));
        }
    }
}

std::optional<std::size_t> HistoricalPanel::find(std::string_view station_id) const {
    for (std::size_t i = 0; i < stations_.size(); ++i)
        if (stations_[i].id == station_id) return i;
    return std::nullopt;
}

std::size_t HistoricalPanel::at(std::string_view station_id) const {
    auto i = find(station_id);
    if (!i) throw ArgumentError("unknown station '" + std::string(station_id) + "'");
    return *i;
}

std::vector<double> HistoricalPanel::observed(std::size_t col) const {
    std::vector<double> out;
    auto column = values_.col(static_cast<Eigen::Index>(col));
    for (Eigen::Index r = 0; r < column.size(); ++r)
        if (!std::isnan(column(r))) out.push_back(column(r));
    return out;
}

HistoricalPanel HistoricalPanel::select(const std::vector<std::string>& ids) const {
    std::vector<StationMeta> st;
    Eigen::MatrixXd v(values_.rows(), static_cast<Eigen::Index>(ids.size()));
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const auto c = at(ids[i]);
        st.push_back(stations_[c]);
        v.col(static_cast<Eigen::Index>(i)) = values_.col(static_cast<Eigen::Index>(c));
    }
    return {std::move(st), index_, std::move(v), resolution_};
}

std::vector<StationMeta> load_metadata(const std::filesystem::path& path) {
    std::vector<StationMeta> out;
    std::set<std::string, std::less<>> seen;
    csv::for_each_row(path, "station_id,kind,capacity_mw,is_evidence",
                      [&](std::size_t line, const std::vector<std::string_view>& f) {
                          if (f.size() != 4) throw ParseError("expected 4 fields", line);
                          StationMeta m;
                          m.id = std::string(f[0]);
                          if (m.id.empty()) throw ParseError("empty station_id", line);
                          auto kind = parse_station_kind(f[1]);
                          if (!kind) throw ParseError("unknown kind '" + std::string(f[1]) + "'", line);
                          m.kind = *kind;
                          if (!csv::parse_double(f[2], m.capacity) || !std::isfinite(m.capacity) ||
                              m.capacity < 0.0)
                              throw ParseError("invalid capacity_mw '" + std::string(f[2]) + "'", line);
                          if (m.unit() == Unit::CapacityFactor && m.capacity <= 0.0)
                              throw RangeError("station '" + m.id +
                                               "': generation station needs capacity_mw > 0");
                          if (f[3] == "true" || f[3] == "1")
                              m.is_evidence = true;
                          else if (f[3] == "false" || f[3] == "0")
                              m.is_evidence = false;
                          else
                              throw ParseError("invalid is_evidence '" + std::string(f[3]) + "'", line);
                          if (!seen.insert(m.id).second)
                              throw DuplicateError(fmt::format("line {}: duplicate station '{}'", line, m.id));
                          out.push_back(std::move(m));
                      });
    return out;
}

void write_metadata(const std::vector<StationMeta>& stations, const std::filesystem::path& path) {
    auto out = fmt::output_file(path.string());
    out.print("station_id,kind,capacity_mw,is_evidence\n");
    for (const auto& s : stations)
        out.print("{},{},{},{}\n", s.id, to_string(s.kind), s.capacity, s.is_evidence ? "true" : "false");
}

HistoricalPanel load_panel(const std::filesystem::path& data_path,
                           const std::filesystem::path& meta_path,
                           std::optional<Resolution> resolution) {
    return load_panel(data_path, load_metadata(meta_path), resolution);
}

HistoricalPanel load_panel(const std::filesystem::path& data_path,
                           const std::vector<StationMeta>& meta,
                           std::optional<Resolution> resolution) {
    struct Row {
        Timestamp t;
        std::size_t station;
        double value;
        std::size_t line;
    };
    std::unordered_map<std::string, std::size_t> by_id;
    for (std::size_t i = 0; i < meta.size(); ++i) by_id.emplace(meta[i].id, i);

    std::vector<Row> rows;
    std::string key;
    csv::for_each_row(data_path, "timestamp,station_id,value",
                      [&](std::size_t line, const std::vector<std::string_view>& f) {
                          if (f.size() != 3) throw ParseError("expected 3 fields", line);
                          auto t = parse_timestamp(f[0]);
                          if (!t) throw ParseError("invalid timestamp '" + std::string(f[0]) + "'", line);
                          key.assign(f[1]);
                          auto it = by_id.find(key);
                          if (it == by_id.end())
                              throw ParseError("station '" + key + "' missing from metadata", line);
                          double v = 0.0;
                          if (!csv::parse_double(f[2], v) || !std::isfinite(v))
                              throw ParseError("invalid value '" + std::string(f[2]) + "'", line);
                          rows.push_back({*t, it->second, v, line});
                      });
    if (rows.empty()) throw InsufficientDataError("no observations in " + data_path.string());

    std::vector<Timestamp> stamps;
    stamps.reserve(rows.size());
    for (const auto& r : rows) stamps.push_back(r.t);
    std::sort(stamps.begin(), stamps.end());
    stamps.erase(std::unique(stamps.begin(), stamps.end()), stamps.end());

    Resolution res = Resolution::Hourly;
    if (resolution) {
        res = *resolution;
    } else {
        const bool all_month_starts = std::all_of(stamps.begin(), stamps.end(), is_month_start);
        const bool wide_steps = stamps.size() > 1 && stamps[1] - stamps[0] >= std::chrono::hours{24 * 28};
        if (all_month_starts && wide_steps) res = Resolution::Monthly;
    }

    std::vector<Timestamp> index;
    if (res == Resolution::Hourly) {
        for (auto t = stamps.front(); t <= stamps.back(); t += std::chrono::hours{1}) index.push_back(t);
    } else {
        const auto first = year_month_of(stamps.front());
        index = month_range(first, year_month_of(stamps.back()).minus(first) + 1);
    }

    auto row_of = [&](const Row& r) -> std::size_t {
        auto it = std::lower_bound(index.begin(), index.end(), r.t);
        if (it == index.end() || *it != r.t)
            throw ParseError("timestamp " + format_timestamp(r.t, Resolution::Hourly) +
                                 " not aligned to the panel resolution",
                             r.line);
        return static_cast<std::size_t>(it - index.begin());
    };

    // Stations present in the data, in metadata order.
    std::vector<char> present(meta.size(), 0);
    for (const auto& r : rows) present[r.station] = 1;
    std::vector<std::size_t> column_of(meta.size(), 0);
    std::vector<StationMeta> stations;
    for (std::size_t i = 0; i < meta.size(); ++i)
        if (present[i]) {
            column_of[i] = stations.size();
            stations.push_back(meta[i]);
        }

    Eigen::MatrixXd values = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(index.size()),
                                                       static_cast<Eigen::Index>(stations.size()), kNaN);
    for (const auto& r : rows) {
        const auto& st = meta[r.station];
        const auto ri = static_cast<Eigen::Index>(row_of(r));
        const auto ci = static_cast<Eigen::Index>(column_of[r.station]);
        if (!std::isnan(values(ri, ci)))
            throw DuplicateError(fmt::format("line {}: duplicate observation for station '{}' at {}", r.line,
                                             st.id, format_timestamp(r.t, res)));
        const double v = st.unit() == Unit::CapacityFactor ? r.value / st.capacity : r.value;
        const bool ok = st.unit() == Unit::Volume ? v >= 0.0 : (v >= 0.0 && v <= 1.0);
        if (!ok)
            throw RangeError(fmt::format("line {}: station '{}' at {}: {} {} outside {}", r.line, st.id,
                                         format_timestamp(r.t, res),
                                         st.unit() == Unit::Volume ? "volume" : "capacity factor", v,
                                         st.unit() == Unit::Volume ? "[0, inf)" : "[0, 1]"));
        values(ri, ci) = v;
    }
    return {std::move(stations), std::move(index), std::move(values), res};
}

void write_panel(const HistoricalPanel& panel, const std::filesystem::path& path) {
    auto out = fmt::output_file(path.string());
    out.print("timestamp,station_id,value\n");
    const auto& v = panel.values();
    for (std::size_t r = 0; r < panel.rows(); ++r) {
        const auto stamp = format_timestamp(panel.index()[r], panel.resolution());
        for (std::size_t c = 0; c < panel.cols(); ++c) {
            double x = v(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
            if (std::isnan(x)) continue;
            const auto& st = panel.stations()[c];
            if (st.unit() == Unit::CapacityFactor) x *= st.capacity;
            out.print("{},{},{}\n", stamp, st.id, x);
        }
    }
}

HistoricalPanel aggregate_to_monthly(const HistoricalPanel& hourly) {
    if (hourly.resolution() != Resolution::Hourly)
        throw ArgumentError("aggregate_to_monthly needs an hourly panel");
    if (hourly.rows() == 0) throw AggregationError("hourly panel has no timestamps");

    const auto& idx = hourly.index();
    const auto first = year_month_of(idx.front());
    const int n_months = year_month_of(idx.back()).minus(first) + 1;
    auto months = month_range(first, n_months);

    // Row span [begin, end) of each month inside the uniform hourly index.
    std::vector<std::pair<Eigen::Index, Eigen::Index>> span(months.size());
    for (std::size_t m = 0; m < months.size(); ++m) {
        auto lo = std::lower_bound(idx.begin(), idx.end(), months[m]);
        auto hi = std::lower_bound(idx.begin(), idx.end(), first.next(static_cast<int>(m) + 1).start());
        span[m] = {lo - idx.begin(), hi - idx.begin()};
    }

    const auto& src = hourly.values();
    const auto n_cols = static_cast<Eigen::Index>(hourly.cols());
    Eigen::MatrixXd out = Eigen::MatrixXd::Constant(n_months, n_cols, kNaN);

#pragma omp parallel for schedule(static)
    for (Eigen::Index c = 0; c < n_cols; ++c) {
        for (int m = 0; m < n_months; ++m) {
            const auto [b, e] = span[static_cast<std::size_t>(m)];
            if (e - b != year_month_of(months[static_cast<std::size_t>(m)]).hours()) continue;
            double sum = 0.0;
            bool complete = true;
            for (Eigen::Index r = b; r < e; ++r) {
                const double v = src(r, c);
                if (std::isnan(v)) {
                    complete = false;
                    break;
                }
                sum += v;
            }
            if (complete) out(m, c) = sum / static_cast<double>(e - b);
        }
    }

    for (Eigen::Index c = 0; c < n_cols; ++c)
        if (out.col(c).array().isNaN().all())
            throw AggregationError("station '" + hourly.stations()[static_cast<std::size_t>(c)].id +
                                   "' has no complete calendar month");
    return {hourly.stations(), std::move(months), std::move(out), Resolution::Monthly};
}

HistoricalPanel merge_panels(const HistoricalPanel& a, const HistoricalPanel& b) {
    if (a.resolution() != b.resolution()) throw ArgumentError("cannot merge panels of different resolution");
    for (const auto& s : b.stations())
        if (a.find(s.id)) throw DuplicateError("station '" + s.id + "' present in both panels");
    if (a.rows() == 0) return b;
    if (b.rows() == 0) return a;

    const auto lo = std::min(a.index().front(), b.index().front());
    const auto hi = std::max(a.index().back(), b.index().back());
    std::vector<Timestamp> index;
    if (a.resolution() == Resolution::Hourly) {
        for (auto t = lo; t <= hi; t += std::chrono::hours{1}) index.push_back(t);
    } else {
        index = month_range(year_month_of(lo), year_month_of(hi).minus(year_month_of(lo)) + 1);
    }

    std::vector<StationMeta> stations = a.stations();
    stations.insert(stations.end(), b.stations().begin(), b.stations().end());
    Eigen::MatrixXd values = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(index.size()),
                                                       static_cast<Eigen::Index>(stations.size()), kNaN);
    auto place = [&](const HistoricalPanel& p, Eigen::Index col0) {
        const auto offset = std::lower_bound(index.begin(), index.end(), p.index().front()) - index.begin();
        values.block(offset, col0, p.values().rows(), p.values().cols()) = p.values();
    };
    place(a, 0);
    place(b, static_cast<Eigen::Index>(a.cols()));
    return {std::move(stations), std::move(index), std::move(values), a.resolution()};
}

}  // namespace scengen
