#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "thermoscope/tensor.hpp"

namespace thermoscope {

// Versioned binary container for model state (loss network weights, style
// checkpoints, trained detector handles).
//
// Layout, all integers little-endian:
//   bytes 0..3   magic "TSCK"
//   u32          container format version (currently 1)
//   u64          header length N in bytes
//   N bytes      UTF-8 JSON header:
//                  {"metadata": {...},
//                   "tensors": [{"name", "shape", "offset", "count"}, ...]}
//   payload      float64 values; each tensor starts at header-relative
//                "offset" (in values) from the end of the header
struct Container {
    nlohmann::json metadata = nlohmann::json::object();
    std::vector<std::pair<std::string, Tensor>> tensors;

    const Tensor& tensor(const std::string& name) const;
    bool has_tensor(const std::string& name) const;
};

inline constexpr std::uint32_t kContainerVersion = 1;

void write_container(const std::filesystem::path& path, const Container& container);
Container read_container(const std::filesystem::path& path);

}  // namespace thermoscope
