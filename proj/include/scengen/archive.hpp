#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <json.hpp>

#include "scengen/bnet.hpp"
#include "scengen/disagg.hpp"
#include "scengen/inflow.hpp"

namespace scengen {

inline constexpr int kArchiveSchemaVersion = 1;

/// Everything `fit` produces. The disaggregation model refers to its hourly
/// history by path and fingerprint instead of embedding it.
struct ModelArchive {
    std::vector<StationMeta> stations;
    BayesNet net;
    std::optional<InflowModel> inflow;
    std::optional<DisaggModel> disagg;
    std::filesystem::path hourly_source;
    std::uint64_t hourly_fingerprint = 0;
};

nlohmann::json to_json(const MarginalModel& m);
MarginalModel marginal_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ModelArchive& archive);
/// With `attach_hourly` the hourly history is reloaded and checked against the
/// stored fingerprint.
ModelArchive archive_from_json(const nlohmann::json& j, bool attach_hourly = true);

void save_archive(const ModelArchive& archive, const std::filesystem::path& path);
ModelArchive load_archive(const std::filesystem::path& path, bool attach_hourly = true);

}  // namespace scengen
