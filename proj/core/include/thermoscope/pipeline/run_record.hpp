#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "thermoscope/data/types.hpp"
#include "thermoscope/eval/voc_eval.hpp"

namespace thermoscope::pipeline {

// SHA-1 of "blob <size>\0<content>", as `git hash-object` prints it.
std::string git_blob_hash(const std::filesystem::path& path);
std::string git_blob_hash_bytes(const std::string& content);

// Hash over the sorted "<image_id> <blob hash>" lines of every readable
// image a manifest references.
std::string manifest_images_hash(const data::DatasetManifest& manifest);

// UTC, ISO 8601 with seconds.
std::string utc_timestamp();

struct RunRecord {
    std::string pipeline;
    std::string tag;
    nlohmann::json config = nlohmann::json::object();
    std::map<std::string, std::string> input_hashes;  // input name -> content hash
    std::string started_at;
    std::string finished_at;
    std::map<std::string, std::filesystem::path> artifacts;
    std::optional<eval::EvalReport> report;
    // Frames scored by the report, by pair key when records have one;
    // lets the two CDMT reports be compared frame for frame.
    std::vector<std::string> eval_frames;
    nlohmann::json extra = nlohmann::json::object();
    std::vector<std::string> warnings;

    void add_artifact(const std::string& name, const std::filesystem::path& path);
    // Throws IoError naming the first listed artifact missing on disk.
    void check_artifacts() const;
    nlohmann::json to_json() const;
    void save(const std::filesystem::path& path) const;
};

}  // namespace thermoscope::pipeline
