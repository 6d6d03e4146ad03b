#include "thermoscope/style/losses.hpp"

#include <cmath>

#include "thermoscope/error.hpp"
#include "thermoscope/nn/kernels.hpp"

namespace thermoscope::style {

void check_loss_weights(const LossWeights& w) {
    if (!(w.content >= 0) || !(w.style >= 0) || !(w.tv >= 0)) {
        throw ConfigError("loss weights must be non-negative");
    }
}

namespace {

void check_same(const FeatureMap& a, const FeatureMap& b, const char* what) {
    if (!a.values.same_shape(b.values)) {
        throw DimensionError(std::string(what) + ": shape " + shape_string(a.values.shape()) + " vs " +
                             shape_string(b.values.shape()));
    }
}

void check_aligned(const FeaturePyramid& generated, const std::vector<GramMatrix>& targets) {
    if (generated.maps.size() != targets.size()) {
        throw DimensionError("style_loss: " + std::to_string(generated.maps.size()) + " scales vs " +
                             std::to_string(targets.size()) + " targets");
    }
    for (std::size_t j = 0; j < targets.size(); ++j) {
        const auto c = static_cast<Eigen::Index>(generated.maps[j].channels());
        if (targets[j].values.rows() != c || targets[j].values.cols() != c) {
            throw DimensionError("style_loss: scale " + std::to_string(j + 1) + " has " + std::to_string(c) +
                                 " channels but target is " + std::to_string(targets[j].values.rows()) + "x" +
                                 std::to_string(targets[j].values.cols()));
        }
    }
}

}  // namespace

double content_loss(const FeatureMap& generated, const FeatureMap& content) {
    check_same(generated, content, "content_loss");
    double s = 0.0;
    for (std::size_t i = 0; i < generated.values.size(); ++i) {
        const double d = generated.values[i] - content.values[i];
        s += d * d;
    }
    return s;
}

Tensor content_loss_gradient(const FeatureMap& generated, const FeatureMap& content) {
    check_same(generated, content, "content_loss");
    Tensor g(generated.values.shape());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = 2.0 * (generated.values[i] - content.values[i]);
    return g;
}

double style_loss(const FeaturePyramid& generated, const std::vector<GramMatrix>& targets) {
    check_aligned(generated, targets);
    double s = 0.0;
    for (std::size_t j = 0; j < targets.size(); ++j) {
        s += (gram(generated.maps[j]).values - targets[j].values).squaredNorm();
    }
    return s;
}

std::vector<Tensor> style_loss_gradient(const FeaturePyramid& generated, const std::vector<GramMatrix>& targets) {
    check_aligned(generated, targets);
    std::vector<Tensor> grads;
    for (std::size_t j = 0; j < targets.size(); ++j) {
        const Matrix diff = gram(generated.maps[j]).values - targets[j].values;
        Tensor g(generated.maps[j].values.shape());
        nn::kernels::gram_backward(generated.maps[j].values, to_tensor(2.0 * diff), g);
        grads.push_back(std::move(g));
    }
    return grads;
}

double tv_loss(const Image& image) {
    if (image.rank() != 3 || image.height() < 2 || image.width() < 2) {
        throw DimensionError("tv_loss needs spatial dimensions of at least 2x2, got " + shape_string(image.shape()));
    }
    return nn::kernels::total_variation(image);
}

Tensor tv_loss_gradient(const Image& image) {
    tv_loss(image);
    Tensor g(image.shape());
    nn::kernels::total_variation_backward(image, 1.0, g);
    return g;
}

double weighted_total(const LossWeights& w, double content, double style, double tv) {
    return w.content * content + w.style * style + w.tv * tv;
}

}  // namespace thermoscope::style
