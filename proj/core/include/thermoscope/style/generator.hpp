#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "thermoscope/image.hpp"
#include "thermoscope/nn/graph.hpp"
#include "thermoscope/style/features.hpp"
#include "thermoscope/style/loss_network.hpp"

namespace thermoscope::style {

// Transformation network layout: 3 convolutions (strides 1, 2, 2), a CoMatch
// layer at the deepest encoder scale, residual blocks, two nearest-upsample
// convolutions and a final convolution squashed by a sigmoid to [0, 1].
// Every convolution except the last is followed by instance normalisation
// and ReLU. The encoder is shared with the style branch (siamese).
struct GeneratorArch {
    int channels = 16;  // width of the first encoder stage; later stages x2, x4
    int residual_blocks = 5;

    int comatch_channels() const { return 4 * channels; }
    nlohmann::json to_json() const;
    static GeneratorArch from_json(const nlohmann::json& j);
    friend bool operator==(const GeneratorArch&, const GeneratorArch&) = default;
};

class Generator {
public:
    // Spatial sides are padded up to a multiple of this before the forward.
    static constexpr int kAlignment = 4;

    static Generator create(const GeneratorArch& arch, std::uint64_t seed);
    static Generator from_parameters(const GeneratorArch& arch, nn::ParameterList params);

    const GeneratorArch& arch() const { return arch_; }
    nn::ParameterList& parameters() { return params_; }
    const nn::ParameterList& parameters() const { return params_; }

    // Gram of the shared encoder's deepest features; the CoMatch target.
    Tensor style_gram(const Image& style_image) const;

    // Differentiable forward. content must already be aligned; the
    // CoMatch target is a constant of the call.
    nn::Var forward(nn::Graph& g, nn::Var content, const Tensor& comatch_target);
    // Same network with parameters bound as constants (no gradients).
    nn::Var forward_frozen(nn::Graph& g, nn::Var content, const Tensor& comatch_target) const;

private:
    template <class Bind>
    nn::Var build(nn::Graph& g, nn::Var x, const Tensor* comatch_target, Bind&& bind) const;

    GeneratorArch arch_;
    nn::ParameterList params_;
};

// Style statistics for one style image: loss-network Grams for the style
// loss, plus the encoder Gram the generator's CoMatch layer matches against.
struct StyleTargets {
    std::vector<GramMatrix> grams;
    std::optional<Tensor> comatch_target;
};

StyleTargets set_style_targets(const Image& style_image, const LossNetwork& network);
StyleTargets set_style_targets(const Image& style_image, const LossNetwork& network, const Generator& generator);

// G(x_c, x_s): same spatial size as content_image, 3 channels in [0, 1].
Image generator_forward(const Image& content_image, const Generator& generator, const StyleTargets& targets);

Image align_image(const Image& image);

}  // namespace thermoscope::style
