#pragma once

#include <vector>

#include "thermoscope/image.hpp"
#include "thermoscope/style/features.hpp"

namespace thermoscope::style {

struct LossWeights {
    double content = 1.0;
    double style = 5.0;
    double tv = 1e-6;
};

void check_loss_weights(const LossWeights& w);

// Squared Frobenius distance; unweighted.
double content_loss(const FeatureMap& generated, const FeatureMap& content);
// d/d(generated)
Tensor content_loss_gradient(const FeatureMap& generated, const FeatureMap& content);


double style_loss(const FeaturePyramid& generated, const std::vector<GramMatrix>& targets);
// d/d(generated maps), one tensor per scale.
std::vector<Tensor> style_loss_gradient(const FeaturePyramid& generated, const std::vector<GramMatrix>& targets);

double tv_loss(const Image& image);
Tensor tv_loss_gradient(const Image& image);

double weighted_total(const LossWeights& w, double content, double style, double tv);

}  // namespace thermoscope::style
