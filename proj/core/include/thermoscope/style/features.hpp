#pragma once

#include <Eigen/Dense>
#include <vector>

#include "thermoscope/tensor.hpp"

namespace thermoscope::style {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Activations of one loss-network tap, shape (C_j, H_j, W_j).
struct FeatureMap {
    Tensor values;
    int scale_index = 1;

    int channels() const { return values.channels(); }
};

struct FeaturePyramid {
    std::vector<FeatureMap> maps;  // scales 1..K in order
    int content_scale = 1;         // 1-based

    const FeatureMap& content() const { return maps.at(static_cast<std::size_t>(content_scale - 1)); }
};

struct GramMatrix {
    Matrix values;
    int scale_index = 1;
    // Divisor applied to Phi Phi^T, i.e. C_j * H_j * W_j.
    double normalization = 1.0;
};

// One learnable C x C matrix for the CoMatch layer.
struct CoMatchWeights {
    Matrix W;
};

// (C, H, W) -> (C, H*W) and back.
Matrix phi(const FeatureMap& f);
FeatureMap phi_inverse(const Matrix& m, int height, int width, int scale_index = 1);

void check_feature_map(const FeatureMap& f);

GramMatrix gram(const FeatureMap& f);
FeatureMap comatch(const FeatureMap& content, const GramMatrix& target, const CoMatchWeights& weights);

Tensor to_tensor(const Matrix& m);
Matrix to_matrix(const Tensor& t);

}  // namespace thermoscope::style
