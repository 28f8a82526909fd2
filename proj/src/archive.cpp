#include "scengen/archive.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>
#include <fmt/os.h>

#include "csv.hpp"
#include "scengen/config.hpp"
#include "scengen/error.hpp"

namespace scengen {

namespace {

using nlohmann::json;

json matrix_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(rows)}};
}

Eigen::MatrixXd matrix_from(const json& j) {
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const auto& data = j.at("data");
    if (static_cast<Eigen::Index>(data.size()) != rows) throw ConfigurationError("archive matrix has a bad row count");
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = data[static_cast<std::size_t>(r)];
        if (static_cast<Eigen::Index>(row.size()) != cols) throw ConfigurationError("archive matrix has a bad column count");
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
    return m;
}

json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vector_from(const json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json bound_json(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

double bound_from(const json& j, double fallback) { return j.is_null() ? fallback : j.get<double>(); }

json station_json(const StationMeta& s) {
    return {{"id", s.id}, {"kind", std::string(to_string(s.kind))}, {"capacity_mw", s.capacity}, {"is_evidence", s.is_evidence}};
}

StationMeta station_from(const json& j) {
    StationMeta s;
    s.id = j.at("id").get<std::string>();
    const auto kind = parse_station_kind(j.at("kind").get<std::string>());
    if (!kind) throw ConfigurationError("archive: unknown station kind for '" + s.id + "'");
    s.kind = *kind;
    s.capacity = j.at("capacity_mw").get<double>();
    s.is_evidence = j.at("is_evidence").get<bool>();
    return s;
}

json stations_json(const std::vector<StationMeta>& v) {
    json arr = json::array();
    for (const auto& s : v) arr.push_back(station_json(s));
    return arr;
}

std::vector<StationMeta> stations_from(const json& j) {
    std::vector<StationMeta> out;
    for (const auto& s : j) out.push_back(station_from(s));
    return out;
}

json inflow_json(const InflowModel& m) {
    json stations = json::array();
    for (const auto& st : m.stations) {
        json months = json::array();
        for (const auto& mp : st.months)
            months.push_back({{"log_mean", mp.log_mean},
                              {"log_std", mp.log_std},
                              {"phi", mp.phi},
                              {"innovation_std", mp.innovation_std}});
        stations.push_back({{"station", st.station.id}, {"zero_floor", st.zero_floor}, {"months", std::move(months)}});
    }
    return {{"order", m.order}, {"pooled", m.pooled}, {"stations", std::move(stations)}};
}

InflowModel inflow_from(const json& j, const std::vector<StationMeta>& meta) {
    InflowModel m;
    m.order = j.at("order").get<int>();
    m.pooled = j.at("pooled").get<bool>();
    for (const auto& sj : j.at("stations")) {
        InflowStation st;
        const auto id = sj.at("station").get<std::string>();
        auto it = std::find_if(meta.begin(), meta.end(), [&](const StationMeta& s) { return s.id == id; });
        if (it == meta.end()) throw ConfigurationError("archive: inflow station '" + id + "' not listed");
        st.station = *it;
        st.zero_floor = sj.at("zero_floor").get<double>();
        const auto& months = sj.at("months");
        if (months.size() != 12) throw ConfigurationError("archive: inflow station '" + id + "' needs 12 months");
        for (std::size_t k = 0; k < 12; ++k) {
            auto& mp = st.months[k];
            mp.log_mean = months[k].at("log_mean").get<double>();
            mp.log_std = months[k].at("log_std").get<double>();
            mp.phi = months[k].at("phi").get<std::vector<double>>();
            mp.innovation_std = months[k].at("innovation_std").get<double>();
        }
        m.stations.push_back(std::move(st));
    }
    return m;
}

json disagg_json(const DisaggModel& d) {
    json months = json::array();
    for (const auto& dm : d.months)
        months.push_back({{"years", dm.years},
                          {"means", vector_json(dm.means)},
                          {"loadings", matrix_json(dm.loadings)},
                          {"projections", matrix_json(dm.projections)},
                          {"cf", matrix_json(dm.cf)},
                          {"retained_fraction", dm.retained_fraction}});
    json ids = json::array();
    for (const auto& s : d.stations) ids.push_back(s.id);
    return {{"stations", std::move(ids)}, {"variance_threshold", d.variance_threshold}, {"months", std::move(months)}};
}

}  // namespace

json to_json(const MarginalModel& m) {
    if (m.is_constant()) return {{"constant", m.samples().front()}};
    return {{"samples", m.samples()},
            {"bandwidth", m.bandwidth()},
            {"support", {bound_json(m.support().lo), bound_json(m.support().hi)}},
            {"grid_size", m.grid_size()}};
}

MarginalModel marginal_from_json(const json& j) {
    if (j.contains("constant")) return MarginalModel::constant(j["constant"].get<double>());
    const auto& sup = j.at("support");
    const Interval support{bound_from(sup.at(0), -std::numeric_limits<double>::infinity()),
                           bound_from(sup.at(1), std::numeric_limits<double>::infinity())};
    return MarginalModel(j.at("samples").get<std::vector<double>>(), j.at("bandwidth").get<double>(), support,
                         j.at("grid_size").get<std::size_t>());
}

json to_json(const ModelArchive& a) {
    const auto& net = a.net;
    json j;
    j["schema_version"] = kArchiveSchemaVersion;
    j["stations"] = stations_json(a.stations);

    json marginals = json::object();
    for (const auto& [id, m] : net.marginals) marginals[id] = to_json(m);
    j["marginals"] = std::move(marginals);

    json edges = json::array();
    for (const auto& [from, to] : net.dag.edges()) edges.push_back({net.dag.nodes[from], net.dag.nodes[to]});
    j["network"] = {{"nodes", net.dag.nodes},
                    {"max_parents", net.dag.max_parents},
                    {"edges", std::move(edges)},
                    {"score", net.score}};
    json regs = json::array();
    for (const auto& r : net.regressions)
        regs.push_back({{"node", r.node},
                        {"parents", r.parents},
                        {"coefficients", r.coefficients},
                        {"residual_variance", r.residual_variance},
                        {"residuals", r.residuals}});
    j["network"]["regressions"] = std::move(regs);

    j["inflow"] = a.inflow ? inflow_json(*a.inflow) : json(nullptr);
    if (a.disagg) {
        j["disagg"] = disagg_json(*a.disagg);
        j["disagg"]["hourly_source"] = {{"path", a.hourly_source.string()},
                                        {"fingerprint", fmt::format("{:016x}", a.hourly_fingerprint)}};
    } else {
        j["disagg"] = nullptr;
    }
    return j;
}

ModelArchive archive_from_json(const json& j, bool attach_hourly) {
    try {
        if (j.at("schema_version").get<int>() != kArchiveSchemaVersion)
            throw ConfigurationError(fmt::format("archive schema version {} is not supported (expected {})",
                                                 j.at("schema_version").dump(), kArchiveSchemaVersion));
        ModelArchive a;
        a.stations = stations_from(j.at("stations"));
        auto meta_of = [&](const std::string& id) -> const StationMeta& {
            for (const auto& s : a.stations)
                if (s.id == id) return s;
            throw ConfigurationError("archive: station '" + id + "' not listed");
        };

        const auto& nj = j.at("network");
        std::vector<StationMeta> node_meta;
        for (const auto& id : nj.at("nodes")) node_meta.push_back(meta_of(id.get<std::string>()));
        auto& net = a.net;
        net.stations = node_meta;
        net.dag = Dag::empty(node_meta, nj.at("max_parents").get<std::size_t>());
        for (const auto& e : nj.at("edges")) {
            const auto from = net.dag.index_of(e.at(0).get<std::string>());
            const auto to = net.dag.index_of(e.at(1).get<std::string>());
            net.dag.parents[to].push_back(from);
        }
        for (auto& p : net.dag.parents) std::sort(p.begin(), p.end());
        net.dag.validate();
        net.score = nj.at("score").get<double>();
        for (const auto& rj : nj.at("regressions")) {
            NodeRegression r;
            r.node = rj.at("node").get<std::string>();
            r.parents = rj.at("parents").get<std::vector<std::string>>();
            r.coefficients = rj.at("coefficients").get<std::vector<double>>();
            r.residual_variance = rj.at("residual_variance").get<double>();
            r.residuals = rj.at("residuals").get<std::vector<double>>();
            if (r.parents.size() != r.coefficients.size())
                throw ConfigurationError("archive: regression of '" + r.node + "' has mismatched coefficients");
            net.regressions.push_back(std::move(r));
        }
        if (net.regressions.size() != net.dag.size())
            throw ConfigurationError("archive: one regression per network node is required");
        for (std::size_t i = 0; i < net.dag.size(); ++i) {
            const auto& r = net.regressions[i];
            if (r.node != net.dag.nodes[i] || r.parents.size() != net.dag.parents[i].size())
                throw ConfigurationError("archive: regression of '" + r.node + "' does not match the network");
            for (std::size_t k = 0; k < r.parents.size(); ++k)
                if (net.dag.nodes[net.dag.parents[i][k]] != r.parents[k])
                    throw ConfigurationError("archive: regression parents of '" + r.node + "' do not match the network");
        }
        for (const auto& [id, mj] : j.at("marginals").items()) net.marginals.emplace(id, marginal_from_json(mj));

        if (!j.at("inflow").is_null()) a.inflow = inflow_from(j["inflow"], a.stations);

        if (!j.at("disagg").is_null()) {
            const auto& dj = j["disagg"];
            DisaggModel d;
            std::vector<std::string> ids;
            for (const auto& id : dj.at("stations")) {
                ids.push_back(id.get<std::string>());
                d.stations.push_back(meta_of(ids.back()));
            }
            d.variance_threshold = dj.at("variance_threshold").get<double>();
            const auto& months = dj.at("months");
            if (months.size() != 12) throw ConfigurationError("archive: disaggregation needs 12 months");
            for (std::size_t k = 0; k < 12; ++k) {
                auto& dm = d.months[k];
                const auto& mj = months[k];
                dm.years = mj.at("years").get<std::vector<int>>();
                dm.means = vector_from(mj.at("means"));
                dm.loadings = matrix_from(mj.at("loadings"));
                dm.projections = matrix_from(mj.at("projections"));
                dm.cf = matrix_from(mj.at("cf"));
                dm.retained_fraction = mj.at("retained_fraction").get<double>();
            }
            a.hourly_source = dj.at("hourly_source").at("path").get<std::string>();
            a.hourly_fingerprint = std::stoull(dj.at("hourly_source").at("fingerprint").get<std::string>(), nullptr, 16);
            if (attach_hourly) {
                const auto bytes = csv::read_file(a.hourly_source);
                if (fnv1a(bytes) != a.hourly_fingerprint)
                    throw ConfigurationError("hourly history '" + a.hourly_source.string() +
                                             "' changed since the model was fitted");
                d.hourly = std::make_shared<const HistoricalPanel>(
                    load_panel(a.hourly_source, a.stations, Resolution::Hourly).select(ids));
            }
            a.disagg = std::move(d);
        }
        return a;
    } catch (const json::exception& e) {
        throw ConfigurationError(std::string("malformed model archive: ") + e.what());
    }
}

void save_archive(const ModelArchive& archive, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto out = fmt::output_file(path.string());
    out.print("{}\n", to_json(archive).dump(1));
}

ModelArchive load_archive(const std::filesystem::path& path, bool attach_hourly) {
    json j;
    try {
        j = json::parse(csv::read_file(path));
    } catch (const json::parse_error& e) {
        throw ConfigurationError(fmt::format("{}: {}", path.string(), e.what()));
    }
    return archive_from_json(j, attach_hourly);
}

}  // namespace scengen
