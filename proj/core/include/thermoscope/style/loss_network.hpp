#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "thermoscope/image.hpp"
#include "thermoscope/nn/graph.hpp"
#include "thermoscope/style/features.hpp"

namespace thermoscope::style {

// Fixed descriptive network: the VGG-16 convolution stack up to relu4_3,
// tapped after relu1_2, relu2_2, relu3_3 and relu4_3 (K = 4). Content loss is
// taken at the third tap.
class LossNetwork {
public:
    static constexpr int kScales = 4;
    static constexpr int kContentScale = 3;
    // Smallest input side; the deepest tap then still spans 2x2.
    static constexpr int kMinInputSize = 16;
    static constexpr std::array<int, kScales> kTapChannels{64, 128, 256, 512};

    // Deterministic He-initialised weights, used when no pretrained
    // checkpoint is available.
    static LossNetwork random(std::uint64_t seed = 16);
    static LossNetwork load(const std::filesystem::path& path);
    // $THERMOSCOPE_CACHE/vgg16_loss_network.tsck if present, else random().
    static LossNetwork from_cache_or_random(std::uint64_t seed = 16);

    void save(const std::filesystem::path& path) const;

    // Image in [0, 1]; ImageNet mean/std normalisation is applied inside.
    FeaturePyramid extract(const Image& image) const;
    // Differentiable variant; returns one Var per tap.
    std::vector<nn::Var> forward(nn::Graph& g, nn::Var image) const;

    bool pretrained() const { return pretrained_; }
    const std::string& source() const { return source_; }
    const nn::ParameterList& parameters() const { return params_; }

    static void check_input(const Image& image);

private:
    LossNetwork() = default;

    nn::ParameterList params_;
    bool pretrained_ = false;
    std::string source_;
};

}  // namespace thermoscope::style
