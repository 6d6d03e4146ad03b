#pragma once

#include "thermoscope/nn/graph.hpp"
#include "thermoscope/style/generator.hpp"
#include "thermoscope/style/loss_network.hpp"
#include "thermoscope/style/losses.hpp"

namespace thermoscope::style {

struct ObjectiveTerms {
    double total = 0;
    double content = 0;  // unweighted
    double style = 0;    // unweighted
    double tv = 0;       // unweighted
};

struct ObjectiveVars {
    nn::Var total, content, style, tv;
    nn::Var generated;
};

// Builds lambda_c * content + lambda_s * style + lambda_tv * tv on the graph.
// content_image must be aligned (see align_image); content_features are the
// loss-network activations of that image at the content scale.
ObjectiveVars build_objective(nn::Graph& g, Generator& generator, const LossNetwork& network, nn::Var content_image,
                              const FeatureMap& content_features, const StyleTargets& targets,
                              const LossWeights& weights);

// Forward-only evaluation for one (content, style) pair.
ObjectiveTerms total_objective(const Image& content_image, const Image& style_image, const Generator& generator,
                               const LossWeights& weights, const LossNetwork& network);

// Evaluates the objective for a pair whose targets are already set and adds
// d(total)/d(params) * grad_scale into the generator's parameter gradients.
ObjectiveTerms accumulate_objective_gradient(const Image& content_image, const StyleTargets& targets,
                                             Generator& generator, const LossWeights& weights,
                                             const LossNetwork& network, double grad_scale = 1.0);
// Same, with the aligned content image and its content-scale features
// precomputed (they do not depend on the generator).
ObjectiveTerms accumulate_objective_gradient(const Image& aligned_content, const FeatureMap& content_features,
                                             const StyleTargets& targets, Generator& generator,
                                             const LossWeights& weights, const LossNetwork& network,
                                             double grad_scale = 1.0);

}  // namespace thermoscope::style
