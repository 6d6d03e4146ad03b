#include "thermoscope/style/objective.hpp"

#include "thermoscope/error.hpp"
#include "thermoscope/nn/ops.hpp"

namespace thermoscope::style {

ObjectiveVars build_objective(nn::Graph& g, Generator& generator, const LossNetwork& network, nn::Var content_image,
                              const FeatureMap& content_features, const StyleTargets& targets,
                              const LossWeights& weights) {
    check_loss_weights(weights);
    if (!targets.comatch_target) throw StateError("objective: style targets are unset");
    if (targets.grams.size() != static_cast<std::size_t>(LossNetwork::kScales)) {
        throw DimensionError("objective: expected " + std::to_string(LossNetwork::kScales) + " style targets");
    }
    ObjectiveVars v;
    v.generated = generator.forward(g, content_image, *targets.comatch_target);
    const auto taps = network.forward(g, v.generated);

    v.content = nn::squared_distance(g, taps[LossNetwork::kContentScale - 1], g.input(content_features.values));
    std::vector<nn::Var> style_terms;
    for (std::size_t j = 0; j < taps.size(); ++j) {
        style_terms.push_back(nn::squared_distance(g, nn::gram(g, taps[j]), g.input(to_tensor(targets.grams[j].values))));
    }
    v.style = nn::weighted_sum(g, style_terms, std::vector<double>(style_terms.size(), 1.0));
    v.tv = nn::total_variation(g, v.generated);
    v.total = nn::weighted_sum(g, {v.content, v.style, v.tv}, {weights.content, weights.style, weights.tv});
    return v;
}

namespace {

ObjectiveTerms read_terms(const nn::Graph& g, const ObjectiveVars& v) {
    return {g.value(v.total)[0], g.value(v.content)[0], g.value(v.style)[0], g.value(v.tv)[0]};
}

}  // namespace

ObjectiveTerms total_objective(const Image& content_image, const Image& style_image, const Generator& generator,
                               const LossWeights& weights, const LossNetwork& network) {
    const StyleTargets targets = set_style_targets(style_image, network, generator);
    const Image aligned = align_image(content_image);
    const FeaturePyramid content = network.extract(aligned);
    Generator copy = generator;
    nn::Graph g(false);
    const ObjectiveVars v = build_objective(g, copy, network, g.input(aligned), content.content(), targets, weights);
    return read_terms(g, v);
}

ObjectiveTerms accumulate_objective_gradient(const Image& content_image, const StyleTargets& targets,
                                             Generator& generator, const LossWeights& weights,
                                             const LossNetwork& network, double grad_scale) {
    const Image aligned = align_image(content_image);
    const FeaturePyramid content = network.extract(aligned);
    return accumulate_objective_gradient(aligned, content.content(), targets, generator, weights, network, grad_scale);
}

ObjectiveTerms accumulate_objective_gradient(const Image& aligned_content, const FeatureMap& content_features,
                                             const StyleTargets& targets, Generator& generator,
                                             const LossWeights& weights, const LossNetwork& network,
                                             double grad_scale) {
    nn::Graph g(true);
    const ObjectiveVars v =
        build_objective(g, generator, network, g.input(aligned_content), content_features, targets, weights);
    g.backward(v.total, grad_scale);
    return read_terms(g, v);
}

}  // namespace thermoscope::style
