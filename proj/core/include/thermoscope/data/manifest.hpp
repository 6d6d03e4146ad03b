#pragma once

#include <cstdint>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "thermoscope/data/types.hpp"

namespace thermoscope::data {

inline constexpr int kManifestSchemaVersion = 1;

nlohmann::json to_json(const DatasetManifest& manifest);
DatasetManifest manifest_from_json(const nlohmann::json& doc);

void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
DatasetManifest load_manifest(const std::filesystem::path& path);

// Deterministic split for a fixed seed. Records sharing a pair_key are kept
// together, so for paired manifests the fraction applies to pairs.
DatasetManifest make_split(const DatasetManifest& manifest, double train_fraction, std::uint64_t seed);

}  // namespace thermoscope::data
