#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <omp.h>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "scengen/error.hpp"
#include "scengen/fixture.hpp"
#include "scengen/pipeline.hpp"

namespace {

int exit_code(scengen::ErrorCategory c) {
    switch (c) {
        case scengen::ErrorCategory::Config: return 2;
        case scengen::ErrorCategory::Data: return 3;
        case scengen::ErrorCategory::Numeric: return 4;
    }
    return 1;
}

const char* category_name(scengen::ErrorCategory c) {
    switch (c) {
        case scengen::ErrorCategory::Config: return "config";
        case scengen::ErrorCategory::Data: return "data";
        case scengen::ErrorCategory::Numeric: return "numeric";
    }
    return "error";
}

void set_threads(int flag) {
    int n = flag;
    if (const char* env = std::getenv("SCENGEN_THREADS"); env != nullptr && *env != '\0') {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (*end != '\0' || v < 1) throw scengen::ConfigurationError(fmt::format("SCENGEN_THREADS='{}' is not a positive integer", env));
        n = static_cast<int>(v);
    }
    if (n > 0) omp_set_num_threads(n);
}

}  // namespace

int main(int argc, char** argv) {
    using namespace scengen;
    CLI::App app{"Gaussian-copula Bayesian-network scenario generator"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "Worker threads (default: all logical cores; SCENGEN_THREADS overrides)")
        ->check(CLI::NonNegativeNumber);

    std::string config_path, model_path, evidence_path, scenarios_dir, out;
    std::uint64_t seed = 42;
    std::string fixture_set = "desk8";

    auto* fit = app.add_subcommand("fit", "Fit marginals, network, inflow and disaggregation models");
    fit->add_option("--config", config_path, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
    fit->add_option("--out", out, "Archive path (default: <output_dir>/model.json)");

    auto* sim = app.add_subcommand("simulate", "Generate monthly and hourly scenarios");
    sim->add_option("--config", config_path)->required()->check(CLI::ExistingFile);
    sim->add_option("--model", model_path, "Fitted model archive")->required()->check(CLI::ExistingFile);
    sim->add_option("--evidence", evidence_path, "External inflow scenarios CSV")->check(CLI::ExistingFile);
    sim->add_option("--out", out, "Output directory (default: output_dir)");

    auto* val = app.add_subcommand("validate", "Compare scenarios with the historical record");
    val->add_option("--config", config_path)->required()->check(CLI::ExistingFile);
    val->add_option("--model", model_path)->required()->check(CLI::ExistingFile);
    val->add_option("--scenarios", scenarios_dir, "Directory holding scenarios_monthly.csv")
        ->required()
        ->check(CLI::ExistingDirectory);
    val->add_option("--out", out, "Report directory (default: output_dir)");

    auto* fix = app.add_subcommand("make-fixture", "Write synthetic datasets with known ground truth");
    fix->add_option("--out", out, "Target directory")->required();
    fix->add_option("--seed", seed, "Generator seed");
    fix->add_option("--set", fixture_set, "desk8, hourly10, wide50 or all")
        ->check(CLI::IsMember({"desk8", "hourly10", "wide50", "all"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        set_threads(threads);
        if (*fix) {
            const std::filesystem::path dir = out;
            if (fixture_set == "desk8" || fixture_set == "all") write_desk_fixture(dir / "desk8", seed);
            if (fixture_set == "hourly10" || fixture_set == "all") write_hourly_fixture(dir / "hourly10", seed);
            if (fixture_set == "wide50" || fixture_set == "all") write_wide_fixture(dir / "wide50", seed);
            return 0;
        }

        const auto config = load_config(config_path);
        if (*fit) {
            const std::filesystem::path path = out.empty() ? config.archive_path() : std::filesystem::path(out);
            save_archive(fit_model(config), path);
            write_manifest(config.output_dir, "fit", config, {path});
            fmt::print("wrote {}\n", path.string());
        } else if (*sim) {
            const auto model = load_archive(model_path);
            std::optional<ScenarioSet> evidence;
            if (!evidence_path.empty()) evidence = read_scenarios(evidence_path, model.stations, Resolution::Monthly);
            const auto result = run_simulation(config, model, evidence ? &*evidence : nullptr);
            const std::filesystem::path dir = out.empty() ? config.output_dir : std::filesystem::path(out);
            write_simulation(result, dir);
            std::vector<std::filesystem::path> artifacts{dir / "scenarios_monthly.csv"};
            if (result.hourly)
                for (auto name : {"scenarios_hourly.csv", "provenance.csv", "clipping.csv"}) artifacts.push_back(dir / name);
            write_manifest(dir, "simulate", config, artifacts);
            fmt::print("wrote {} scenarios to {}\n", result.monthly.scenario_count(), dir.string());
        } else if (*val) {
            const auto model = load_archive(model_path, false);
            const auto report = run_validation(config, model, scenarios_dir);
            const std::filesystem::path dir = out.empty() ? config.output_dir : std::filesystem::path(out);
            write_report(report, dir);
            std::vector<std::filesystem::path> artifacts;
            for (auto name : {"report.json", "fisher_hist.csv", "corr_scatter.csv", "bands.csv"}) artifacts.push_back(dir / name);
            write_manifest(dir, "validate", config, artifacts);
            fmt::print("pass fraction {:.4f} over {} pairs (alpha {}), mean |r_synth - r_hist| {:.4f}\n",
                       report.pass_fraction, report.pair_tests.size(), report.alpha, report.mean_abs_corr_diff);
        }
        return 0;
    } catch (const Error& e) {
        std::cerr << "scengen: " << category_name(e.category()) << " error: " << e.what() << '\n';
        return exit_code(e.category());
    } catch (const std::exception& e) {
        std::cerr << "scengen: error: " << e.what() << '\n';
        return 1;
    }
}
