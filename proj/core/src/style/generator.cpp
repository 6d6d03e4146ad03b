#include "thermoscope/style/generator.hpp"

#include "thermoscope/error.hpp"
#include "thermoscope/nn/kernels.hpp"
#include "thermoscope/nn/ops.hpp"
#include "thermoscope/random.hpp"

namespace thermoscope::style {

nlohmann::json GeneratorArch::to_json() const {
    return {{"family", "msgnet-lite"}, {"channels", channels}, {"residual_blocks", residual_blocks}};
}

GeneratorArch GeneratorArch::from_json(const nlohmann::json& j) {
    GeneratorArch a;
    a.channels = j.value("channels", a.channels);
    a.residual_blocks = j.value("residual_blocks", a.residual_blocks);
    if (a.channels < 1 || a.residual_blocks < 0) throw ConfigError("invalid generator architecture");
    return a;
}

namespace {

void add_conv(nn::ParameterList& ps, const std::string& name, int out, int in, int k, Rng& rng, bool norm) {
    ps.emplace_back(name + ".weight", nn::he_normal({out, in, k, k}, rng));
    ps.emplace_back(name + ".bias", Tensor({out}, 0.0));
    if (norm) {
        ps.emplace_back(name + ".gamma", Tensor({out}, 1.0));
        ps.emplace_back(name + ".beta", Tensor({out}, 0.0));
    }
}

}  // namespace

Generator Generator::create(const GeneratorArch& arch, std::uint64_t seed) {
    if (arch.channels < 1 || arch.residual_blocks < 0) throw ConfigError("invalid generator architecture");
    Generator gen;
    gen.arch_ = arch;
    Rng rng = SeedStreams(seed).stream("generator-init");
    const int b = arch.channels;
    auto& ps = gen.params_;
    add_conv(ps, "enc1", b, 3, 3, rng, true);
    add_conv(ps, "enc2", 2 * b, b, 3, rng, true);
    add_conv(ps, "enc3", 4 * b, 2 * b, 3, rng, true);
    Tensor w({4 * b, 4 * b}, 0.0);
    for (int i = 0; i < 4 * b; ++i) w[static_cast<std::size_t>(i * 4 * b + i)] = 1.0;
    ps.emplace_back("comatch.W", std::move(w));
    for (int r = 0; r < arch.residual_blocks; ++r) {
        const std::string name = "res" + std::to_string(r);
        add_conv(ps, name + ".conv1", 4 * b, 4 * b, 3, rng, true);
        add_conv(ps, name + ".conv2", 4 * b, 4 * b, 3, rng, true);
    }
    add_conv(ps, "up1", 2 * b, 4 * b, 3, rng, true);
    add_conv(ps, "up2", b, 2 * b, 3, rng, true);
    add_conv(ps, "out", 3, b, 3, rng, false);
    return gen;
}

Generator Generator::from_parameters(const GeneratorArch& arch, nn::ParameterList params) {
    Generator reference = create(arch, 0);
    if (reference.params_.size() != params.size()) {
        throw IoError("generator parameter count does not match architecture");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].name != reference.params_[i].name || !params[i].value.same_shape(reference.params_[i].value)) {
            throw IoError("generator parameter '" + params[i].name + "' does not match architecture");
        }
        if (!params[i].value.all_finite()) throw NumericError("generator parameter '" + params[i].name + "' is not finite");
        params[i].grad = Tensor(params[i].value.shape());
    }
    reference.params_ = std::move(params);
    return reference;
}

template <class Bind>
nn::Var Generator::build(nn::Graph& g, nn::Var x, const Tensor* comatch_target, Bind&& bind) const {
    auto conv_block = [&](nn::Var in, const std::string& name, int stride, bool act) {
        nn::Var y = nn::conv2d(g, in, bind(name + ".weight"), bind(name + ".bias"), stride, 1);
        y = nn::instance_norm(g, y, bind(name + ".gamma"), bind(name + ".beta"));
        return act ? nn::relu(g, y) : y;
    };
    x = conv_block(x, "enc1", 1, true);
    x = conv_block(x, "enc2", 2, true);
    x = conv_block(x, "enc3", 2, true);
    if (!comatch_target) return x;

    x = nn::comatch(g, x, bind("comatch.W"), *comatch_target);
    for (int r = 0; r < arch_.residual_blocks; ++r) {
        const std::string name = "res" + std::to_string(r);
        nn::Var y = conv_block(x, name + ".conv1", 1, true);
        y = conv_block(y, name + ".conv2", 1, false);
        x = nn::add(g, x, y);
    }
    x = conv_block(nn::upsample_nearest2(g, x), "up1", 1, true);
    x = conv_block(nn::upsample_nearest2(g, x), "up2", 1, true);
    x = nn::conv2d(g, x, bind("out.weight"), bind("out.bias"), 1, 1);
    return nn::sigmoid(g, x);
}

nn::Var Generator::forward(nn::Graph& g, nn::Var content, const Tensor& comatch_target) {
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < params_.size(); ++i) index[params_[i].name] = i;
    return build(g, content, &comatch_target,
                 [&](const std::string& name) { return g.parameter(params_.at(index.at(name))); });
}

nn::Var Generator::forward_frozen(nn::Graph& g, nn::Var content, const Tensor& comatch_target) const {
    return build(g, content, &comatch_target,
                 [&](const std::string& name) { return g.constant(nn::find_parameter(params_, name).value); });
}

Image align_image(const Image& image) {
    const int k = Generator::kAlignment;
    const int h = (image.height() + k - 1) / k * k;
    const int w = (image.width() + k - 1) / k * k;
    return pad_replicate(image, h, w);
}

Tensor Generator::style_gram(const Image& style_image) const {
    check_image(style_image, "style image");
    nn::Graph g(false);
    const nn::Var x = g.input(align_image(style_image));
    const nn::Var features = build(g, x, nullptr, [&](const std::string& name) {
        return g.constant(nn::find_parameter(params_, name).value);
    });
    return nn::kernels::gram(g.value(features));
}

StyleTargets set_style_targets(const Image& style_image, const LossNetwork& network) {
    StyleTargets t;
    for (const auto& map : network.extract(style_image).maps) t.grams.push_back(gram(map));
    return t;
}

StyleTargets set_style_targets(const Image& style_image, const LossNetwork& network, const Generator& generator) {
    StyleTargets t = set_style_targets(style_image, network);
    t.comatch_target = generator.style_gram(style_image);
    return t;
}

Image generator_forward(const Image& content_image, const Generator& generator, const StyleTargets& targets) {
    check_image(content_image, "content image");
    if (!targets.comatch_target) {
        throw StateError("generator_forward: style targets are unset; call set_style_targets with the generator");
    }
    const int expect = generator.arch().comatch_channels();
    if (targets.comatch_target->shape() != std::vector<int>{expect, expect}) {
        throw DimensionError("generator_forward: CoMatch target does not match the generator width");
    }
    nn::Graph g(false);
    const nn::Var x = g.input(align_image(content_image));
    const nn::Var y = generator.forward_frozen(g, x, *targets.comatch_target);
    return crop(g.value(y), content_image.height(), content_image.width());
}

}  // namespace thermoscope::style
