#include "thermoscope/style/loss_network.hpp"

#include <cstdlib>

#include "thermoscope/container.hpp"
#include "thermoscope/error.hpp"
#include "thermoscope/nn/ops.hpp"
#include "thermoscope/random.hpp"

namespace thermoscope::style {

namespace {

// Output channels per conv layer; 0 marks a 2x2 max pool. Taps follow the
// layers flagged below.
struct Layer {
    int channels;
    bool tap;
};

constexpr std::array<Layer, 13> kLayers{{
    {64, false}, {64, true}, {0, false},
    {128, false}, {128, true}, {0, false},
    {256, false}, {256, false}, {256, true}, {0, false},
    {512, false}, {512, false}, {512, true},
}};

const std::vector<double> kMean{0.485, 0.456, 0.406};
const std::vector<double> kStd{0.229, 0.224, 0.225};

constexpr const char* kArchitecture = "vgg16-relu4_3";

std::string conv_name(int index) { return "conv" + std::to_string(index); }

}  // namespace

LossNetwork LossNetwork::random(std::uint64_t seed) {
    LossNetwork net;
    Rng rng = SeedStreams(seed).stream("loss-network-init");
    int in = 3;
    int conv = 0;
    for (const auto& layer : kLayers) {
        if (layer.channels == 0) continue;
        net.params_.emplace_back(conv_name(conv) + ".weight", nn::he_normal({layer.channels, in, 3, 3}, rng));
        net.params_.emplace_back(conv_name(conv) + ".bias", Tensor({layer.channels}, 0.0));
        in = layer.channels;
        ++conv;
    }
    net.source_ = "random(seed=" + std::to_string(seed) + ")";
    return net;
}

LossNetwork LossNetwork::load(const std::filesystem::path& path) {
    Container c = read_container(path);
    if (c.metadata.value("architecture", std::string()) != kArchitecture) {
        throw IoError("loss network checkpoint " + path.string() + " is not a " + kArchitecture + " container");
    }
    LossNetwork net = random(0);
    for (auto& p : net.params_) {
        const Tensor& t = c.tensor(p.name);
        if (!t.same_shape(p.value)) throw IoError("loss network tensor '" + p.name + "' has the wrong shape");
        p.value = t;
    }
    net.pretrained_ = c.metadata.value("pretrained", false);
    net.source_ = path.string();
    return net;
}

LossNetwork LossNetwork::from_cache_or_random(std::uint64_t seed) {
    if (const char* cache = std::getenv("THERMOSCOPE_CACHE")) {
        const std::filesystem::path p = std::filesystem::path(cache) / "vgg16_loss_network.tsck";
        if (std::filesystem::exists(p)) return load(p);
    }
    return random(seed);
}

void LossNetwork::save(const std::filesystem::path& path) const {
    Container c;
    c.metadata = {{"kind", "loss-network"},
                  {"architecture", kArchitecture},
                  {"taps", {"relu1_2", "relu2_2", "relu3_3", "relu4_3"}},
                  {"content_tap", kContentScale},
                  {"input_normalization", {{"range", "[0,1]"}, {"mean", kMean}, {"std", kStd}}},
                  {"pretrained", pretrained_}};
    for (const auto& p : params_) c.tensors.emplace_back(p.name, p.value);
    write_container(path, c);
}

void LossNetwork::check_input(const Image& image) {
    check_image(image, "loss network");
    if (image.height() < kMinInputSize || image.width() < kMinInputSize) {
        throw DimensionError("loss network input " + shape_string(image.shape()) + " is below the minimum " +
                             std::to_string(kMinInputSize) + "x" + std::to_string(kMinInputSize));
    }
}

std::vector<nn::Var> LossNetwork::forward(nn::Graph& g, nn::Var image) const {
    check_input(g.value(image));
    std::vector<nn::Var> taps;
    nn::Var x = nn::channel_normalize(g, image, kMean, kStd);
    std::size_t p = 0;
    for (const auto& layer : kLayers) {
        if (layer.channels == 0) {
            x = nn::max_pool2(g, x);
            continue;
        }
        const nn::Var w = g.constant(params_[p].value);
        const nn::Var b = g.constant(params_[p + 1].value);
        p += 2;
        x = nn::relu(g, nn::conv2d(g, x, w, b, 1, 1));
        if (layer.tap) taps.push_back(x);
    }
    return taps;
}

FeaturePyramid LossNetwork::extract(const Image& image) const {
    nn::Graph g(false);
    const auto taps = forward(g, g.input(image));
    FeaturePyramid pyramid;
    pyramid.content_scale = kContentScale;
    for (std::size_t j = 0; j < taps.size(); ++j) {
        pyramid.maps.push_back({g.value(taps[j]), static_cast<int>(j + 1)});
    }
    return pyramid;
}

}  // namespace thermoscope::style
