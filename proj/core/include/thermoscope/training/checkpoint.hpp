#pragma once

#include <filesystem>
#include <vector>

#include <nlohmann/json.hpp>

#include "thermoscope/style/generator.hpp"

namespace thermoscope::training {

inline constexpr int kCheckpointFormatVersion = 1;

struct LossRecord {
    long iteration = 0;
    double total = 0;
    double content = 0;
    double style = 0;
    double tv = 0;

    friend bool operator==(const LossRecord&, const LossRecord&) = default;
};

struct Checkpoint {
    style::Generator generator;
    nlohmann::json config = nlohmann::json::object();  // StyleTrainConfig snapshot
    int epoch = 0;
    std::vector<LossRecord> history;
    int format_version = kCheckpointFormatVersion;

    void save(const std::filesystem::path& path) const;
    static Checkpoint load(const std::filesystem::path& path);
};

}  // namespace thermoscope::training
