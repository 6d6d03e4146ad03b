#include "thermoscope/style/features.hpp"

#include "thermoscope/error.hpp"
#include "thermoscope/nn/kernels.hpp"

namespace thermoscope::style {

void check_feature_map(const FeatureMap& f) {
    if (f.values.rank() != 3 || f.values.channels() < 1 || f.values.height() < 1 || f.values.width() < 1) {
        throw DimensionError("feature map must be (C,H,W) with positive extents, got " +
                             shape_string(f.values.shape()));
    }
    if (!f.values.all_finite()) {
        throw NumericError("feature map at scale " + std::to_string(f.scale_index) + " has non-finite entries");
    }
}

Matrix phi(const FeatureMap& f) {
    check_feature_map(f);
    return Eigen::Map<const Matrix>(f.values.data(), f.values.channels(),
                                    static_cast<Eigen::Index>(f.values.plane()));
}

FeatureMap phi_inverse(const Matrix& m, int height, int width, int scale_index) {
    if (m.cols() != static_cast<Eigen::Index>(height) * width) {
        throw DimensionError("phi_inverse: " + std::to_string(m.cols()) + " columns cannot form " +
                             std::to_string(height) + "x" + std::to_string(width));
    }
    FeatureMap f;
    f.values = Tensor::chw(static_cast<int>(m.rows()), height, width);
    Eigen::Map<Matrix>(f.values.data(), m.rows(), m.cols()) = m;
    f.scale_index = scale_index;
    return f;
}

Tensor to_tensor(const Matrix& m) {
    Tensor t({static_cast<int>(m.rows()), static_cast<int>(m.cols())});
    Eigen::Map<Matrix>(t.data(), m.rows(), m.cols()) = m;
    return t;
}

Matrix to_matrix(const Tensor& t) {
    if (t.rank() != 2) throw DimensionError("expected a matrix, got " + shape_string(t.shape()));
    return Eigen::Map<const Matrix>(t.data(), t.dim(0), t.dim(1));
}

GramMatrix gram(const FeatureMap& f) {
    check_feature_map(f);
    GramMatrix g;
    g.values = to_matrix(nn::kernels::gram(f.values));
    g.scale_index = f.scale_index;
    g.normalization = static_cast<double>(f.values.channels()) * static_cast<double>(f.values.plane());
    return g;
}

FeatureMap comatch(const FeatureMap& content, const GramMatrix& target, const CoMatchWeights& weights) {
    check_feature_map(content);
    FeatureMap out;
    out.values = nn::kernels::comatch(content.values, to_tensor(weights.W), to_tensor(target.values));
    out.scale_index = content.scale_index;
    return out;
}

}  // namespace thermoscope::style
