#include <catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <sstream>

#include <json.hpp>

#include "scengen/archive.hpp"
#include "scengen/config.hpp"
#include "scengen/error.hpp"
#include "scengen/pipeline.hpp"
#include "support.hpp"

using namespace scengen;
using nlohmann::json;

namespace {

const std::string kCli = SCENGEN_CLI;

json base_config(const testing::TempDir& dir) {
    return json{{"data", (testing::fixture_dir / "data.csv").string()},
                {"metadata", (testing::fixture_dir / "metadata.csv").string()},
                {"output_dir", (dir.path() / "out").string()},
                {"model", {{"restarts", 2}}},
                {"simulation", {{"n_scenarios", 20}, {"horizon_start", "2020-01"}, {"horizon_months", 12}, {"seed", 7}}}};
}

std::filesystem::path write_config(const testing::TempDir& dir, const json& j, const std::string& name = "run.json") {
    const auto p = dir.path() / name;
    testing::write_text(p, j.dump(2));
    return p;
}

/// Runs the CLI through the shell; returns the exit status and captures stderr.
int run(const std::string& args, std::string* err = nullptr, const std::string& env = "") {
    testing::TempDir logs("log");
    const auto log = logs / "stderr.txt";
    const std::string cmd = env + " \"" + kCli + "\" " + args + " >/dev/null 2>\"" + log.string() + "\"";
    const int status = std::system(cmd.c_str());
    if (err) *err = testing::read_text(log);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string q(const std::filesystem::path& p) { return "\"" + p.string() + "\""; }

}  // namespace

TEST_CASE("config: defaults and relative paths") {
    testing::TempDir dir("cfg");
    const auto c = parse_config(json{{"data", "d.csv"}, {"metadata", "m.csv"}, {"output_dir", "o"}}, dir.path());
    CHECK(c.data == dir.path() / "d.csv");
    CHECK(c.output_dir == dir.path() / "o");
    CHECK(c.model.max_parents == 6);
    CHECK(c.model.restarts == 5);
    CHECK(c.model.pca_variance_threshold == 0.95);
    CHECK(c.model.ar_order == 1);
    CHECK(c.simulation.n_scenarios == 100);
    CHECK(c.validation.alpha == 0.10);
    CHECK(c.archive_path() == dir.path() / "o" / "model.json");
    CHECK_FALSE(c.inflow_data.has_value());
}

TEST_CASE("config: unknown keys and out-of-range values are rejected") {
    testing::TempDir dir("cfg");
    const auto good = base_config(dir);
    CHECK_NOTHROW(parse_config(good));

    auto with = [&](const json::json_pointer& ptr, const json& value) {
        json j = good;
        j[ptr] = value;
        return j;
    };
    CHECK_THROWS_AS(parse_config(with("/extra"_json_pointer, 1)), ConfigurationError);
    CHECK_THROWS_AS(parse_config(with("/model/depth"_json_pointer, 1)), ConfigurationError);
    CHECK_THROWS_AS(parse_config(with("/simulation/scenarios"_json_pointer, 1)), ConfigurationError);
    CHECK_THROWS_AS(parse_config(with("/model/max_parents"_json_pointer, -1)), ConfigurationError);
    CHECK_THROWS_AS(parse_config(with("/model/max_parents"_json_pointer, 65)), ConfigurationError);
    CHECK_THROWS_AS(parse_config(with("/model/max_parents"_json_pointer, 2.5)), ConfigurationError);
    CHECK_THROWS_AS(parse_config(with("/model/restarts"_json_pointer, 0)), ConfigurationError);
    CHECK_THROWS_AS(parse_config(with("/model/kde_grid_size"_json_pointer, 512)), ConfigurationError);
    CHECK_THROWS_AS(parse_config(with("/model/pca_variance_threshold"_json_pointer, 0.0)), ConfigurationError);
    CHECK_THROWS_AS(parse_config(with("/model/ar_order"_json_pointer, 13)), ConfigurationError);
    CHECK_THROWS_AS(parse_config(with("/simulation/n_scenarios"_json_pointer, 0)), ConfigurationError);
    CHECK_THROWS_AS(parse_config(with("/simulation/horizon_months"_json_pointer, 0)), ConfigurationError);
    CHECK_THROWS_AS(parse_config(with("/simulation/horizon_start"_json_pointer, "2020-13")), ConfigurationError);
    CHECK_THROWS_AS(parse_config(with("/simulation/horizon_start"_json_pointer, "2020-01-05")), ConfigurationError);
    CHECK_THROWS_AS(parse_config(with("/simulation/inflow_source"_json_pointer, "river")), ConfigurationError);
    CHECK_THROWS_AS(parse_config(with("/validation/alpha"_json_pointer, 0.0)), ConfigurationError);
    CHECK_THROWS_AS(parse_config(with("/validation/band_level"_json_pointer, 1.0)), ConfigurationError);
    json missing = good;
    missing.erase("metadata");
    CHECK_THROWS_AS(parse_config(missing), ConfigurationError);
}

TEST_CASE("config hash is stable and sensitive") {
    testing::TempDir dir("cfg");
    const auto a = parse_config(base_config(dir));
    const auto b = parse_config(base_config(dir));
    CHECK(config_hash(a) == config_hash(b));
    CHECK(config_hash(a).size() == 16);
    json j = base_config(dir);
    j["simulation"]["seed"] = 8;
    CHECK(config_hash(parse_config(j)) != config_hash(a));
}

TEST_CASE("archive round trip is bit-identical") {
    testing::TempDir dir("arc");
    const auto config = parse_config(base_config(dir));
    const auto model = fit_model(config);
    const auto text = to_json(model).dump(1);
    const auto back = archive_from_json(json::parse(text));
    CHECK(to_json(back).dump(1) == text);
    CHECK(back.stations == model.stations);
    CHECK(back.net.dag == model.net.dag);
    CHECK(back.net.regressions == model.net.regressions);
    for (const auto& [id, m] : model.net.marginals) {
        const auto& r = back.net.marginals.at(id);
        CHECK(r.bandwidth() == m.bandwidth());
        CHECK(r.grid_x() == m.grid_x());
        CHECK(r.grid_f() == m.grid_f());
        CHECK(r.quantile(0.3) == m.quantile(0.3));
    }
    REQUIRE(back.inflow.has_value());
    CHECK(back.inflow->stations == model.inflow->stations);

    save_archive(model, dir / "a.json");
    const auto loaded = load_archive(dir / "a.json");
    save_archive(loaded, dir / "b.json");
    CHECK(testing::read_text(dir / "a.json") == testing::read_text(dir / "b.json"));
    CHECK(json::parse(testing::read_text(dir / "a.json")).at("schema_version") == kArchiveSchemaVersion);
}

TEST_CASE("archive loading rejects inconsistent content") {
    testing::TempDir dir("arc");
    const auto model = fit_model(parse_config(base_config(dir)));
    auto j = to_json(model);
    auto bad_version = j;
    bad_version["schema_version"] = 99;
    CHECK_THROWS_AS(archive_from_json(bad_version), ConfigurationError);
    auto missing = j;
    missing.erase("network");
    CHECK_THROWS_AS(archive_from_json(missing), ConfigurationError);
    testing::write_text(dir / "junk.json", "{ not json");
    CHECK_THROWS_AS(load_archive(dir / "junk.json"), ConfigurationError);
}

TEST_CASE("max_parents = 0 yields an archive without edges") {
    testing::TempDir dir("mp0");
    json j = base_config(dir);
    j["model"]["max_parents"] = 0;
    const auto model = fit_model(parse_config(j));
    CHECK(model.net.dag.edge_count() == 0);
    CHECK(to_json(model).at("network").at("edges").empty());
}

TEST_CASE("fit errors carry the module and station") {
    testing::TempDir dir("ctx");
    std::string data = testing::read_text(testing::fixture_dir / "data.csv");
    // Every January of H01 becomes the same value: its log inflow has no spread that month.
    std::istringstream in(data);
    std::string line, out;
    while (std::getline(in, line)) {
        if (line.find("-01-01") != std::string::npos && line.find(",H01,") != std::string::npos)
            line = line.substr(0, line.rfind(',')) + ",250";
        out += line + "\n";
    }
    testing::write_text(dir / "data.csv", out);
    json j = base_config(dir);
    j["data"] = (dir / "data.csv").string();
    try {
        fit_model(parse_config(j));
        FAIL("expected a numeric error");
    } catch (const Error& e) {
        CHECK(e.category() == ErrorCategory::Numeric);
        const std::string what = e.what();
        CHECK(what.find("inflow") != std::string::npos);
        CHECK(what.find("H01") != std::string::npos);
    }
    const auto cfg = write_config(dir, j);
    std::string err;
    CHECK(run("fit --config " + q(cfg), &err) == 4);
    CHECK(err.find("H01") != std::string::npos);
}

TEST_CASE("CLI: fit twice gives identical archives and manifests") {
    testing::TempDir dir("fit2");
    const auto cfg = write_config(dir, base_config(dir));
    REQUIRE(run("fit --config " + q(cfg) + " --out " + q(dir / "m1.json")) == 0);
    const auto manifest1 = testing::read_text(dir / "out" / "manifest_fit.json");
    REQUIRE(run("fit --config " + q(cfg) + " --out " + q(dir / "m2.json")) == 0);
    const auto a = testing::read_text(dir / "m1.json");
    CHECK(!a.empty());
    CHECK(a == testing::read_text(dir / "m2.json"));

    const auto m = json::parse(manifest1);
    CHECK(m.at("command") == "fit");
    CHECK(m.at("seed") == 7);
    CHECK(m.at("config_hash") == config_hash(load_config(cfg)));
    CHECK(m.at("archive_schema_version") == kArchiveSchemaVersion);
    CHECK(m.at("artifacts").size() == 1);
}

TEST_CASE("CLI: simulate shapes, determinism and evidence") {
    testing::TempDir dir("sim");
    json j = base_config(dir);
    j["simulation"]["n_scenarios"] = 100;
    const auto cfg = write_config(dir, j);
    const auto model = dir / "out" / "model.json";
    REQUIRE(run("fit --config " + q(cfg)) == 0);
    REQUIRE(std::filesystem::exists(model));

    REQUIRE(run("simulate --config " + q(cfg) + " --model " + q(model)) == 0);
    const auto monthly = testing::read_text(dir / "out" / "scenarios_monthly.csv");
    CHECK(std::count(monthly.begin(), monthly.end(), '\n') == 1 + 100 * 12 * 8);
    CHECK(std::filesystem::exists(dir / "out" / "manifest_simulate.json"));

    json one = j;
    one["simulation"]["n_scenarios"] = 1;
    const auto cfg1 = write_config(dir, one, "one.json");
    REQUIRE(run("simulate --config " + q(cfg1) + " --model " + q(model) + " --out " + q(dir / "s1")) == 0);
    REQUIRE(run("simulate --config " + q(cfg1) + " --model " + q(model) + " --out " + q(dir / "s2")) == 0);
    const auto s1 = testing::read_text(dir / "s1" / "scenarios_monthly.csv");
    CHECK(std::count(s1.begin(), s1.end(), '\n') == 1 + 12 * 8);
    CHECK(s1 == testing::read_text(dir / "s2" / "scenarios_monthly.csv"));

    // External evidence: a constant inflow file for the three hydro stations.
    std::string ev = "scenario,timestamp,station_id,value\n";
    for (int s = 1; s <= 100; ++s)
        for (int m = 1; m <= 12; ++m)
            for (const char* h : {"H01", "H02", "H03"})
                ev += std::to_string(s) + ",2020-" + (m < 10 ? "0" : "") + std::to_string(m) + "," + h + "," +
                      std::to_string(100 + s + m) + ".25\n";
    testing::write_text(dir / "ev.csv", ev);
    REQUIRE(run("simulate --config " + q(cfg) + " --model " + q(model) + " --evidence " + q(dir / "ev.csv") + " --out " +
                q(dir / "se")) == 0);
    const auto meta = load_metadata(testing::fixture_dir / "metadata.csv");
    const auto set = read_scenarios(dir / "se" / "scenarios_monthly.csv", meta, Resolution::Monthly);
    for (const char* h : {"H01", "H02", "H03"}) {
        const auto c = static_cast<Eigen::Index>(*set.find(h));
        for (std::size_t s = 0; s < 100; ++s)
            for (Eigen::Index t = 0; t < 12; ++t)
                CHECK(set.values[s](t, c) == 100.0 + static_cast<double>(s + 1) + static_cast<double>(t + 1) + 0.25);
    }

    // Evidence that stops short of the horizon.
    testing::write_text(dir / "short.csv", "scenario,timestamp,station_id,value\n1,2020-01,H01,5\n");
    std::string err;
    CHECK(run("simulate --config " + q(cfg) + " --model " + q(model) + " --evidence " + q(dir / "short.csv") + " --out " +
              q(dir / "sx"),
              &err) == 3);
    CHECK(err.find("evidence") != std::string::npos);

    REQUIRE(run("validate --config " + q(cfg) + " --model " + q(model) + " --scenarios " + q(dir / "out")) == 0);
    const auto report = json::parse(testing::read_text(dir / "out" / "report.json"));
    CHECK(report.at("pair_tests").size() == 25);
    for (auto name : {"fisher_hist.csv", "corr_scatter.csv", "bands.csv", "manifest_validate.json"})
        CHECK(std::filesystem::exists(dir / "out" / name));
}

TEST_CASE("CLI: exit codes") {
    testing::TempDir dir("exit");
    CHECK(run("--help") == 0);
    CHECK(run("") == 2);
    CHECK(run("frobnicate") == 2);
    CHECK(run("fit --config " + q(dir / "nope.json")) == 2);

    json j = base_config(dir);
    j["bogus"] = true;
    std::string err;
    CHECK(run("fit --config " + q(write_config(dir, j, "bad.json")), &err) == 2);
    CHECK(err.find("bogus") != std::string::npos);

    testing::write_text(dir / "bad_data.csv", "timestamp,station_id,value\n2000-01,G01,not-a-number\n");
    json d = base_config(dir);
    d["data"] = (dir / "bad_data.csv").string();
    CHECK(run("fit --config " + q(write_config(dir, d, "data.json")), &err) == 3);
    CHECK(err.find("data error") != std::string::npos);
}

TEST_CASE("CLI: thread count from the flag and SCENGEN_THREADS") {
    testing::TempDir dir("thr");
    const auto cfg = write_config(dir, base_config(dir));
    const auto manifest = dir / "out" / "manifest_fit.json";
    REQUIRE(run("--threads 3 fit --config " + q(cfg)) == 0);
    CHECK(json::parse(testing::read_text(manifest)).at("threads") == 3);
    const auto a = testing::read_text(dir / "out" / "model.json");
    REQUIRE(run("--threads 3 fit --config " + q(cfg), nullptr, "SCENGEN_THREADS=2") == 0);
    CHECK(json::parse(testing::read_text(manifest)).at("threads") == 2);
    CHECK(testing::read_text(dir / "out" / "model.json") == a);
    CHECK(run("fit --config " + q(cfg), nullptr, "SCENGEN_THREADS=zero") == 2);
}

TEST_CASE("CLI: make-fixture reproduces the bundled fixture") {
    testing::TempDir dir("fx");
    REQUIRE(run("make-fixture --out " + q(dir.path()) + " --seed 42") == 0);
    for (auto name : {"data.csv", "metadata.csv", "truth.json", "run.json"})
        CHECK(testing::read_text(dir.path() / "desk8" / name) == testing::read_text(testing::fixture_dir / name));
}
