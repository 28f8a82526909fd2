#include "scengen/pipeline.hpp"

#include <algorithm>
#include <limits>

#include <omp.h>

#include <fmt/format.h>
#include <fmt/os.h>

#include "scengen/error.hpp"

namespace scengen {

namespace {

/// Re-raises a library error with module and station context, keeping its category.
template <typename Fn>
auto in_context(std::string_view module, const std::string& station, Fn&& fn) {
    try {
        return fn();
    } catch (const Error& e) {
        const auto where = station.empty() ? std::string(module) : fmt::format("{}: station '{}'", module, station);
        throw Error(e.category(), fmt::format("{}: {}", where, e.what()));
    }
}

}  // namespace

Interval support_for(const StationMeta& station) {
    if (station.unit() == Unit::CapacityFactor) return {0.0, 1.0};
    return {0.0, std::numeric_limits<double>::infinity()};
}

RunData load_run_data(const RunConfig& config) {
    return in_context("data", "", [&] {
        const auto meta = load_metadata(config.metadata);
        auto primary = load_panel(config.data, meta);
        std::shared_ptr<const HistoricalPanel> hourly;
        std::filesystem::path source;
        std::optional<HistoricalPanel> monthly;
        if (primary.resolution() == Resolution::Hourly) {
            std::vector<std::string> cf;
            for (const auto& s : primary.stations())
                if (s.unit() == Unit::CapacityFactor) cf.push_back(s.id);
            if (!cf.empty()) {
                hourly = std::make_shared<const HistoricalPanel>(primary.select(cf));
                source = std::filesystem::absolute(config.data).lexically_normal();
            }
            monthly = aggregate_to_monthly(primary);
        } else {
            monthly = std::move(primary);
        }
        if (config.inflow_data)
            monthly = merge_panels(*monthly, load_panel(*config.inflow_data, meta, Resolution::Monthly));
        return RunData{std::move(*monthly), std::move(hourly), std::move(source)};
    });
}

MarginalMap fit_marginals(const HistoricalPanel& monthly, std::size_t grid_size) {
    std::vector<std::optional<MarginalModel>> fitted(monthly.cols());
    for (std::size_t c = 0; c < monthly.cols(); ++c) {
        const auto& s = monthly.stations()[c];
        const auto obs = monthly.observed(c);
        fitted[c] = in_context("marginal", s.id, [&]() -> MarginalModel {
            try {
                return fit_kde(obs, {support_for(s), grid_size, std::nullopt});
            } catch (const DegenerateMarginalError&) {
                return MarginalModel::constant(obs.front());
            }
        });
    }
    MarginalMap out;
    for (std::size_t c = 0; c < monthly.cols(); ++c) out.emplace(monthly.stations()[c].id, std::move(*fitted[c]));
    return out;
}

ModelArchive fit_model(const RunConfig& config, const RunData& data) {
    const auto& monthly = data.monthly;
    ModelArchive a;
    a.stations = monthly.stations();

    auto marginals = fit_marginals(monthly, config.model.kde_grid_size);
    const auto z = in_context("transform", "", [&] { return forward(monthly, marginals); });
    StructureOptions so;
    so.max_parents = config.model.max_parents;
    so.restarts = config.model.restarts;
    so.seed = config.simulation.seed;
    const auto dag = in_context("bnet", "", [&] { return learn_structure(z, so); });
    a.net = in_context("bnet", "", [&] { return fit_regression(dag, z); });
    a.net.marginals = std::move(marginals);

    std::vector<std::string> evidence;
    for (const auto& s : monthly.stations()) {
        if (!s.is_evidence) continue;
        if (s.unit() != Unit::Volume)
            throw ConfigurationError("evidence station '" + s.id + "' must be a hydro inflow series");
        evidence.push_back(s.id);
    }
    if (!evidence.empty()) {
        InflowOptions io;
        io.order = config.model.ar_order;
        io.pooled = config.model.ar_pooled;
        a.inflow = in_context("inflow", "", [&] { return fit_inflow_ar(monthly.select(evidence), io); });
    }
    if (data.hourly) {
        a.disagg = in_context("disagg", "", [&] {
            return fit_disagg(data.hourly, DisaggOptions{config.model.pca_variance_threshold});
        });
        a.hourly_source = data.hourly_source;
        a.hourly_fingerprint = file_fingerprint(data.hourly_source);
    }
    return a;
}

ModelArchive fit_model(const RunConfig& config) { return fit_model(config, load_run_data(config)); }

SimulationOutput run_simulation(const RunConfig& config, const ModelArchive& model, const ScenarioSet* evidence) {
    const auto& sim = config.simulation;
    const auto horizon = month_range(sim.horizon_start, sim.horizon_months);
    std::optional<ScenarioSet> generated;
    if (evidence == nullptr && sim.inflow_source == InflowSource::Ar && model.inflow) {
        generated = in_context("inflow", "", [&] { return generate_inflows(*model.inflow, sim.n_scenarios, horizon, sim.seed); });
        evidence = &*generated;
    }
    SimulationOutput out{in_context("simulate", "", [&] {
                             const auto z = sample_network(model.net, sim.n_scenarios, horizon, evidence, sim.seed);
                             return to_original(z, model.net, evidence);
                         }),
                         std::nullopt};
    if (model.disagg) {
        if (!model.disagg->hourly) throw ConfigurationError("disaggregation model has no hourly history attached");
        out.hourly = in_context("disagg", "", [&] { return disaggregate(out.monthly, *model.disagg); });
    }
    return out;
}

void write_simulation(const SimulationOutput& output, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_scenarios(output.monthly, dir / "scenarios_monthly.csv");
    if (output.hourly) {
        write_scenarios(output.hourly->hourly, dir / "scenarios_hourly.csv");
        write_provenance(*output.hourly, dir / "provenance.csv");
        write_clipping(*output.hourly, dir / "clipping.csv");
    }
}

ValidationReport run_validation(const RunConfig& config, const ModelArchive& model,
                                const std::filesystem::path& scenario_dir) {
    const auto data = load_run_data(config);
    const auto synth = in_context("validate", "", [&] {
        return read_scenarios(scenario_dir / "scenarios_monthly.csv", model.stations, Resolution::Monthly);
    });
    return in_context("validate", "", [&] {
        return build_report(data.monthly, synth, {config.validation.alpha, config.validation.band_level});
    });
}

void write_manifest(const std::filesystem::path& dir, const std::string& command, const RunConfig& config,
                    const std::vector<std::filesystem::path>& artifacts) {
    nlohmann::json j;
    j["command"] = command;
    j["config_hash"] = config_hash(config);
    j["seed"] = config.simulation.seed;
    j["archive_schema_version"] = kArchiveSchemaVersion;
    j["threads"] = omp_get_max_threads();
    j["artifacts"] = nlohmann::json::array();
    for (const auto& p : artifacts)
        j["artifacts"].push_back({{"path", p.filename().string()}, {"fingerprint", fmt::format("{:016x}", file_fingerprint(p))}});
    std::filesystem::create_directories(dir);
    auto out = fmt::output_file((dir / fmt::format("manifest_{}.json", command)).string());
    out.print("{}\n", j.dump(2));
}

}  // namespace scengen
