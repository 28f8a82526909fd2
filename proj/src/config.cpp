#include "scengen/config.hpp"

#include <set>

#include <fmt/format.h>

#include "csv.hpp"
#include "scengen/error.hpp"

namespace scengen {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, std::string_view where, std::initializer_list<std::string_view> keys) {
    if (!j.is_object()) throw ConfigurationError(fmt::format("'{}' must be an object", where));
    const std::set<std::string_view> allowed(keys);
    for (const auto& [key, value] : j.items())
        if (!allowed.count(key)) throw ConfigurationError(fmt::format("unknown key '{}' in {}", key, where));
}

template <typename T>
void read(const json& j, std::string_view key, T& out, std::string_view where) {
    auto it = j.find(std::string(key));
    if (it == j.end()) return;
    try {
        if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
            if (!it->is_number_integer()) throw ConfigurationError("");
            if constexpr (std::is_unsigned_v<T>)
                if (it->template get<long long>() < 0) throw ConfigurationError("");
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!it->is_number()) throw ConfigurationError("");
        } else if constexpr (std::is_same_v<T, bool>) {
            if (!it->is_boolean()) throw ConfigurationError("");
        }
        out = it->template get<T>();
    } catch (const std::exception&) {
        throw ConfigurationError(fmt::format("{}.{} has the wrong type", where, key));
    }
}

template <typename T>
void check_range(T value, T lo, T hi, std::string_view name) {
    if (!(value >= lo && value <= hi))
        throw ConfigurationError(fmt::format("{} = {} outside [{}, {}]", name, value, lo, hi));
}

std::filesystem::path path_of(const json& j, std::string_view key, const std::filesystem::path& base) {
    const auto& v = j.at(std::string(key));
    if (!v.is_string() || v.get<std::string>().empty())
        throw ConfigurationError(fmt::format("'{}' must be a non-empty path string", key));
    std::filesystem::path p = v.get<std::string>();
    return p.is_absolute() || base.empty() ? p : base / p;
}

}  // namespace

RunConfig parse_config(const json& j, const std::filesystem::path& base_dir) {
    reject_unknown(j, "config", {"data", "inflow_data", "metadata", "output_dir", "model", "simulation", "validation"});
    for (auto key : {"data", "metadata", "output_dir"})
        if (!j.contains(key)) throw ConfigurationError(fmt::format("missing required key '{}'", key));

    RunConfig c;
    c.data = path_of(j, "data", base_dir);
    c.metadata = path_of(j, "metadata", base_dir);
    c.output_dir = path_of(j, "output_dir", base_dir);
    if (j.contains("inflow_data") && !j["inflow_data"].is_null()) c.inflow_data = path_of(j, "inflow_data", base_dir);

    if (j.contains("model")) {
        const auto& m = j["model"];
        reject_unknown(m, "model",
                       {"max_parents", "restarts", "kde_grid_size", "pca_variance_threshold", "ar_order", "ar_pooled"});
        read(m, "max_parents", c.model.max_parents, "model");
        read(m, "restarts", c.model.restarts, "model");
        read(m, "kde_grid_size", c.model.kde_grid_size, "model");
        read(m, "pca_variance_threshold", c.model.pca_variance_threshold, "model");
        read(m, "ar_order", c.model.ar_order, "model");
        read(m, "ar_pooled", c.model.ar_pooled, "model");
    }
    check_range<std::size_t>(c.model.max_parents, 0, 64, "model.max_parents");
    check_range(c.model.restarts, 1, 1000, "model.restarts");
    check_range<std::size_t>(c.model.kde_grid_size, 1024, 1 << 20, "model.kde_grid_size");
    if (!(c.model.pca_variance_threshold > 0.0 && c.model.pca_variance_threshold <= 1.0))
        throw ConfigurationError("model.pca_variance_threshold must lie in (0, 1]");
    check_range(c.model.ar_order, 0, 12, "model.ar_order");

    if (j.contains("simulation")) {
        const auto& s = j["simulation"];
        reject_unknown(s, "simulation", {"n_scenarios", "horizon_start", "horizon_months", "seed", "inflow_source"});
        read(s, "n_scenarios", c.simulation.n_scenarios, "simulation");
        read(s, "horizon_months", c.simulation.horizon_months, "simulation");
        read(s, "seed", c.simulation.seed, "simulation");
        if (s.contains("horizon_start")) {
            const auto& v = s["horizon_start"];
            const auto t = v.is_string() ? parse_timestamp(v.get<std::string>()) : std::nullopt;
            if (!t) throw ConfigurationError("simulation.horizon_start must be a \"YYYY-MM\" string");
            c.simulation.horizon_start = year_month_of(*t);
            if (c.simulation.horizon_start.start() != *t)
                throw ConfigurationError("simulation.horizon_start must be a month start");
        }
        if (s.contains("inflow_source")) {
            const auto& v = s["inflow_source"];
            if (v == "ar")
                c.simulation.inflow_source = InflowSource::Ar;
            else if (v == "network")
                c.simulation.inflow_source = InflowSource::Network;
            else
                throw ConfigurationError("simulation.inflow_source must be \"ar\" or \"network\"");
        }
    }
    check_range<std::size_t>(c.simulation.n_scenarios, 1, 1'000'000, "simulation.n_scenarios");
    check_range(c.simulation.horizon_months, 1, 1200, "simulation.horizon_months");

    if (j.contains("validation")) {
        const auto& v = j["validation"];
        reject_unknown(v, "validation", {"alpha", "band_level"});
        read(v, "alpha", c.validation.alpha, "validation");
        read(v, "band_level", c.validation.band_level, "validation");
    }
    if (!(c.validation.alpha > 0.0 && c.validation.alpha <= 1.0))
        throw ConfigurationError("validation.alpha must lie in (0, 1]");
    if (!(c.validation.band_level > 0.0 && c.validation.band_level < 1.0))
        throw ConfigurationError("validation.band_level must lie in (0, 1)");
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(csv::read_file(path));
    } catch (const json::parse_error& e) {
        throw ConfigurationError(fmt::format("{}: {}", path.string(), e.what()));
    }
    return parse_config(j, path.parent_path());
}

json to_json(const RunConfig& c) {
    json j;
    j["data"] = c.data.string();
    j["inflow_data"] = c.inflow_data ? json(c.inflow_data->string()) : json(nullptr);
    j["metadata"] = c.metadata.string();
    j["output_dir"] = c.output_dir.string();
    j["model"] = {{"max_parents", c.model.max_parents},
                  {"restarts", c.model.restarts},
                  {"kde_grid_size", c.model.kde_grid_size},
                  {"pca_variance_threshold", c.model.pca_variance_threshold},
                  {"ar_order", c.model.ar_order},
                  {"ar_pooled", c.model.ar_pooled}};
    j["simulation"] = {{"n_scenarios", c.simulation.n_scenarios},
                       {"horizon_start", c.simulation.horizon_start.str()},
                       {"horizon_months", c.simulation.horizon_months},
                       {"seed", c.simulation.seed},
                       {"inflow_source", c.simulation.inflow_source == InflowSource::Ar ? "ar" : "network"}};
    j["validation"] = {{"alpha", c.validation.alpha}, {"band_level", c.validation.band_level}};
    return j;
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string config_hash(const RunConfig& config) { return fmt::format("{:016x}", fnv1a(to_json(config).dump())); }

std::uint64_t file_fingerprint(const std::filesystem::path& path) { return fnv1a(csv::read_file(path)); }

}  // namespace scengen
