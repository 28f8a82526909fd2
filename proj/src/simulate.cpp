#include "scengen/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <unordered_map>

#include <fmt/format.h>
#include <fmt/os.h>

#include "csv.hpp"
#include "scengen/error.hpp"
#include "scengen/rng.hpp"
#include "scengen/transform.hpp"

namespace scengen {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Evidence columns per DAG node and row per horizon month; -1 when not clamped.
struct EvidenceLookup {
    std::vector<std::ptrdiff_t> column;
    std::vector<Eigen::Index> row;
};

EvidenceLookup resolve_evidence(const BayesNet& net, std::size_t n_scenarios, const std::vector<Timestamp>& horizon,
                                const ScenarioSet* evidence) {
    const auto& dag = net.dag;
    EvidenceLookup lookup{std::vector<std::ptrdiff_t>(dag.size(), -1), {}};
    if (evidence == nullptr) return lookup;

    if (evidence->scenario_count() < n_scenarios)
        throw EvidenceCoverageError(fmt::format("evidence has {} scenarios, {} requested",
                                                evidence->scenario_count(), n_scenarios));
    for (auto t : horizon) {
        auto it = std::lower_bound(evidence->index.begin(), evidence->index.end(), t);
        if (it == evidence->index.end() || *it != t)
            throw EvidenceCoverageError("evidence lacks month " + format_timestamp(t, Resolution::Monthly));
        lookup.row.push_back(it - evidence->index.begin());
    }
    for (std::size_t i = 0; i < dag.size(); ++i) {
        if (!dag.evidence[i]) continue;
        auto c = evidence->find(dag.nodes[i]);
        if (!c) throw EvidenceCoverageError("evidence lacks station '" + dag.nodes[i] + "'");
        lookup.column[i] = static_cast<std::ptrdiff_t>(*c);
        for (std::size_t s = 0; s < n_scenarios; ++s)
            for (auto r : lookup.row)
                if (std::isnan(evidence->values[s](r, static_cast<Eigen::Index>(*c))))
                    throw EvidenceCoverageError(fmt::format("evidence for '{}' missing in scenario {} at {}",
                                                            dag.nodes[i], s + 1,
                                                            format_timestamp(evidence->index[static_cast<std::size_t>(r)],
                                                                             Resolution::Monthly)));
    }
    return lookup;
}

}  // namespace

std::optional<std::size_t> ScenarioSet::find(std::string_view station_id) const {
    for (std::size_t i = 0; i < stations.size(); ++i)
        if (stations[i].id == station_id) return i;
    return std::nullopt;
}

ZSamples sample_network(const BayesNet& net, std::size_t n_scenarios, const std::vector<Timestamp>& horizon,
                        const ScenarioSet* evidence, std::uint64_t seed, bool parallel) {
    if (n_scenarios == 0) throw ArgumentError("n_scenarios must be >= 1");
    if (horizon.empty()) throw ArgumentError("horizon is empty");
    const auto& dag = net.dag;
    const auto order = dag.topological_order();
    const auto lookup = resolve_evidence(net, n_scenarios, horizon, evidence);

    std::vector<const MarginalModel*> margs(dag.size(), nullptr);
    if (evidence != nullptr) {
        for (std::size_t i = 0; i < dag.size(); ++i)
            if (lookup.column[i] >= 0) {
                auto it = net.marginals.find(dag.nodes[i]);
                if (it == net.marginals.end())
                    throw ConfigurationError("no marginal model for evidence station '" + dag.nodes[i] + "'");
                margs[i] = &it->second;
            }
    }
    for (std::size_t i = 0; i < dag.size(); ++i)
        if (lookup.column[i] < 0 && net.regressions[i].residuals.empty())
            throw ConfigurationError("node '" + dag.nodes[i] + "' has no residuals to resample");

    ZSamples out{net.stations, horizon, std::vector<Eigen::MatrixXd>(n_scenarios)};
    const auto n_time = static_cast<Eigen::Index>(horizon.size());
    const auto n_nodes = static_cast<Eigen::Index>(dag.size());
    const auto n_sc = static_cast<std::ptrdiff_t>(n_scenarios);

#pragma omp parallel for schedule(static) if (parallel)
    for (std::ptrdiff_t s = 0; s < n_sc; ++s) {
        Eigen::MatrixXd z(n_time, n_nodes);
        for (Eigen::Index t = 0; t < n_time; ++t) {
            for (auto node : order) {
                const auto i = static_cast<Eigen::Index>(node);
                if (lookup.column[node] >= 0) {
                    const double x = evidence->values[static_cast<std::size_t>(s)](
                        lookup.row[static_cast<std::size_t>(t)], lookup.column[node]);
                    z(t, i) = to_normal(*margs[node], x);
                    continue;
                }
                const auto& reg = net.regressions[node];
                double q = 0.0;
                const auto& pa = dag.parents[node];
                for (std::size_t k = 0; k < pa.size(); ++k)
                    q += reg.coefficients[k] * z(t, static_cast<Eigen::Index>(pa[k]));
                const auto bits = rng::at(seed, {static_cast<std::uint64_t>(s), static_cast<std::uint64_t>(t),
                                                 static_cast<std::uint64_t>(node)});
                q += reg.residuals[rng::below(bits, reg.residuals.size())];
                z(t, i) = q;
            }
        }
        out.z[static_cast<std::size_t>(s)] = std::move(z);
    }
    return out;
}

ScenarioSet to_original(const ZSamples& samples, const BayesNet& net, const ScenarioSet* evidence, bool parallel) {
    const auto models = marginals_for(samples.stations, net.marginals);
    std::vector<std::ptrdiff_t> ev_col(samples.stations.size(), -1);
    std::vector<Eigen::Index> ev_row;
    if (evidence != nullptr) {
        for (std::size_t i = 0; i < samples.stations.size(); ++i)
            if (samples.stations[i].is_evidence)
                if (auto c = evidence->find(samples.stations[i].id)) ev_col[i] = static_cast<std::ptrdiff_t>(*c);
        for (auto t : samples.index) {
            auto it = std::lower_bound(evidence->index.begin(), evidence->index.end(), t);
            ev_row.push_back(it != evidence->index.end() && *it == t ? it - evidence->index.begin() : -1);
        }
    }

    ScenarioSet out;
    out.stations = samples.stations;
    out.index = samples.index;
    out.resolution = Resolution::Monthly;
    out.values.resize(samples.z.size());
    const auto n_sc = static_cast<std::ptrdiff_t>(samples.z.size());

#pragma omp parallel for schedule(static) if (parallel)
    for (std::ptrdiff_t s = 0; s < n_sc; ++s) {
        const auto& z = samples.z[static_cast<std::size_t>(s)];
        Eigen::MatrixXd x(z.rows(), z.cols());
        for (Eigen::Index c = 0; c < z.cols(); ++c) {
            const auto ec = ev_col[static_cast<std::size_t>(c)];
            for (Eigen::Index t = 0; t < z.rows(); ++t) {
                if (ec >= 0 && ev_row[static_cast<std::size_t>(t)] >= 0)
                    x(t, c) = evidence->values[static_cast<std::size_t>(s)](ev_row[static_cast<std::size_t>(t)], ec);
                else
                    x(t, c) = from_normal(*models[static_cast<std::size_t>(c)], z(t, c));
            }
        }
        out.values[static_cast<std::size_t>(s)] = std::move(x);
    }
    return out;
}

ScenarioSet simulate(const BayesNet& net, std::size_t n_scenarios, const std::vector<Timestamp>& horizon,
                     const ScenarioSet* evidence, std::uint64_t seed) {
    auto set = to_original(sample_network(net, n_scenarios, horizon, evidence, seed), net, evidence);
    set.seed = seed;
    return set;
}

void write_scenarios(const ScenarioSet& set, const std::filesystem::path& path) {
    auto out = fmt::output_file(path.string());
    out.print("scenario,timestamp,station_id,value\n");
    std::vector<std::string> stamps;
    stamps.reserve(set.index.size());
    for (auto t : set.index) stamps.push_back(format_timestamp(t, set.resolution));
    for (std::size_t s = 0; s < set.scenario_count(); ++s) {
        const auto& v = set.values[s];
        for (std::size_t t = 0; t < set.index.size(); ++t)
            for (std::size_t c = 0; c < set.stations.size(); ++c) {
                const double x = v(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c));
                if (std::isnan(x)) continue;
                out.print("{},{},{},{}\n", s + 1, stamps[t], set.stations[c].id, x);
            }
    }
}

ScenarioSet read_scenarios(const std::filesystem::path& path, const std::vector<StationMeta>& meta,
                           Resolution resolution) {
    struct Cell {
        std::size_t scenario;
        Timestamp t;
        std::size_t station;
        double value;
        std::size_t line;
    };
    std::unordered_map<std::string, std::size_t> by_id;
    for (std::size_t i = 0; i < meta.size(); ++i) by_id.emplace(meta[i].id, i);
    std::vector<Cell> cells;
    std::size_t n_scenarios = 0;
    std::string key;
    csv::for_each_row(path, "scenario,timestamp,station_id,value",
                      [&](std::size_t line, const std::vector<std::string_view>& f) {
                          if (f.size() != 4) throw ParseError("expected 4 fields", line);
                          long s = 0;
                          if (!csv::parse_long(f[0], s) || s < 1) throw ParseError("invalid scenario number", line);
                          auto t = parse_timestamp(f[1]);
                          if (!t) throw ParseError("invalid timestamp '" + std::string(f[1]) + "'", line);
                          key.assign(f[2]);
                          auto it = by_id.find(key);
                          if (it == by_id.end()) throw ParseError("station '" + key + "' missing from metadata", line);
                          double v = 0.0;
                          if (!csv::parse_double(f[3], v) || !std::isfinite(v))
                              throw ParseError("invalid value '" + std::string(f[3]) + "'", line);
                          cells.push_back({static_cast<std::size_t>(s - 1), *t, it->second, v, line});
                          n_scenarios = std::max(n_scenarios, static_cast<std::size_t>(s));
                      });

    ScenarioSet set;
    set.resolution = resolution;
    std::vector<char> present(meta.size(), 0);
    for (const auto& c : cells) {
        present[c.station] = 1;
        set.index.push_back(c.t);
    }
    std::sort(set.index.begin(), set.index.end());
    set.index.erase(std::unique(set.index.begin(), set.index.end()), set.index.end());
    std::vector<std::size_t> column(meta.size(), 0);
    for (std::size_t i = 0; i < meta.size(); ++i)
        if (present[i]) {
            column[i] = set.stations.size();
            set.stations.push_back(meta[i]);
        }
    set.values.assign(n_scenarios, Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(set.index.size()),
                                                             static_cast<Eigen::Index>(set.stations.size()), kNaN));
    for (const auto& c : cells) {
        const auto r = std::lower_bound(set.index.begin(), set.index.end(), c.t) - set.index.begin();
        double& cell = set.values[c.scenario](r, static_cast<Eigen::Index>(column[c.station]));
        if (!std::isnan(cell))
            throw DuplicateError(fmt::format("line {}: duplicate value for scenario {}, station '{}'", c.line,
                                             c.scenario + 1, meta[c.station].id));
        cell = c.value;
    }
    return set;
}

ScenarioSet select(const ScenarioSet& set, const std::vector<std::string>& ids) {
    ScenarioSet out;
    out.index = set.index;
    out.resolution = set.resolution;
    out.seed = set.seed;
    std::vector<Eigen::Index> cols;
    for (const auto& id : ids) {
        auto c = set.find(id);
        if (!c) throw ArgumentError("scenario set lacks station '" + id + "'");
        cols.push_back(static_cast<Eigen::Index>(*c));
        out.stations.push_back(set.stations[*c]);
    }
    for (const auto& v : set.values) {
        Eigen::MatrixXd m(v.rows(), static_cast<Eigen::Index>(cols.size()));
        for (std::size_t i = 0; i < cols.size(); ++i) m.col(static_cast<Eigen::Index>(i)) = v.col(cols[i]);
        out.values.push_back(std::move(m));
    }
    return out;
}

}  // namespace scengen
