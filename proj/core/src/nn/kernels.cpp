#include "thermoscope/nn/kernels.hpp"

#include <Eigen/Dense>

#include "thermoscope/error.hpp"

namespace thermoscope::nn::kernels {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

void check_rank3(const Tensor& t, const char* what) {
    if (t.rank() != 3) throw DimensionError(std::string(what) + ": expected (C,H,W), got " + shape_string(t.shape()));
}

// Unfolds x into a (Cin*k*k, Ho*Wo) matrix.
RowMat im2col(const Tensor& x, int k, ConvGeometry g, int ho, int wo) {
    const int cin = x.channels();
    const int h = x.height();
    const int w = x.width();
    RowMat col(static_cast<Eigen::Index>(cin) * k * k, static_cast<Eigen::Index>(ho) * wo);
    for (int c = 0; c < cin; ++c)
        for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
                double* row = col.row((c * k + ky) * k + kx).data();
                for (int oy = 0; oy < ho; ++oy) {
                    const int iy = oy * g.stride - g.pad + ky;
                    double* out = row + static_cast<std::size_t>(oy) * wo;
                    if (iy < 0 || iy >= h) {
                        std::fill(out, out + wo, 0.0);
                        continue;
                    }
                    const double* in = x.data() + (static_cast<std::size_t>(c) * h + iy) * w;
                    for (int ox = 0; ox < wo; ++ox) {
                        const int ix = ox * g.stride - g.pad + kx;
                        out[ox] = (ix >= 0 && ix < w) ? in[ix] : 0.0;
                    }
                }
            }
    return col;
}

void col2im_add(const RowMat& col, int k, ConvGeometry g, int ho, int wo, Tensor& gx) {
    const int cin = gx.channels();
    const int h = gx.height();
    const int w = gx.width();
    for (int c = 0; c < cin; ++c)
        for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
                const double* row = col.row((c * k + ky) * k + kx).data();
                for (int oy = 0; oy < ho; ++oy) {
                    const int iy = oy * g.stride - g.pad + ky;
                    if (iy < 0 || iy >= h) continue;
                    double* out = gx.data() + (static_cast<std::size_t>(c) * h + iy) * w;
                    const double* in = row + static_cast<std::size_t>(oy) * wo;
                    for (int ox = 0; ox < wo; ++ox) {
                        const int ix = ox * g.stride - g.pad + kx;
                        if (ix >= 0 && ix < w) out[ix] += in[ox];
                    }
                }
            }
}

}  // namespace

int conv_output_size(int input, int kernel, ConvGeometry g) {
    const int span = input + 2 * g.pad - kernel;
    if (span < 0) return 0;
    return span / g.stride + 1;
}

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor* bias, ConvGeometry g) {
    check_rank3(x, "conv2d");
    if (w.rank() != 4 || w.dim(1) != x.channels() || w.dim(2) != w.dim(3)) {
        throw DimensionError("conv2d: weight " + shape_string(w.shape()) + " incompatible with input " +
                             shape_string(x.shape()));
    }
    const int cout = w.dim(0);
    const int k = w.dim(2);
    const int ho = conv_output_size(x.height(), k, g);
    const int wo = conv_output_size(x.width(), k, g);
    if (ho < 1 || wo < 1) throw DimensionError("conv2d: input " + shape_string(x.shape()) + " too small for kernel");

    Tensor y = Tensor::chw(cout, ho, wo);
    ConstMapMat wm(w.data(), cout, static_cast<Eigen::Index>(w.size() / cout));
    MapMat ym(y.data(), cout, static_cast<Eigen::Index>(ho) * wo);
    if (k == 1 && g.stride == 1 && g.pad == 0) {
        ConstMapMat xm(x.data(), x.channels(), static_cast<Eigen::Index>(ho) * wo);
        ym.noalias() = wm * xm;
    } else {
        ym.noalias() = wm * im2col(x, k, g, ho, wo);
    }
    if (bias) {
        for (int c = 0; c < cout; ++c) ym.row(c).array() += (*bias)[static_cast<std::size_t>(c)];
    }
    return y;
}

void conv2d_backward(const Tensor& x, const Tensor& w, const Tensor& grad_out, ConvGeometry g, Tensor* grad_x,
                     Tensor* grad_w, Tensor* grad_b) {
    const int cout = w.dim(0);
    const int k = w.dim(2);
    const int ho = grad_out.height();
    const int wo = grad_out.width();
    const Eigen::Index patch = static_cast<Eigen::Index>(w.size() / cout);
    ConstMapMat gy(grad_out.data(), cout, static_cast<Eigen::Index>(ho) * wo);
    const bool pointwise = k == 1 && g.stride == 1 && g.pad == 0;

    if (grad_b) {
        for (int c = 0; c < cout; ++c) (*grad_b)[static_cast<std::size_t>(c)] += gy.row(c).sum();
    }
    if (grad_w) {
        MapMat gw(grad_w->data(), cout, patch);
        if (pointwise) {
            ConstMapMat xm(x.data(), x.channels(), static_cast<Eigen::Index>(ho) * wo);
            gw.noalias() += gy * xm.transpose();
        } else {
            gw.noalias() += gy * im2col(x, k, g, ho, wo).transpose();
        }
    }
    if (grad_x) {
        ConstMapMat wm(w.data(), cout, patch);
        if (pointwise) {
            MapMat gx(grad_x->data(), x.channels(), static_cast<Eigen::Index>(ho) * wo);
            gx.noalias() += wm.transpose() * gy;
        } else {
            RowMat dcol = wm.transpose() * gy;
            col2im_add(dcol, k, g, ho, wo, *grad_x);
        }
    }
}

Tensor gram(const Tensor& features) {
    check_rank3(features, "gram");
    const int c = features.channels();
    const auto n = static_cast<Eigen::Index>(features.plane());
    ConstMapMat phi(features.data(), c, n);
    Tensor g({c, c});
    MapMat gm(g.data(), c, c);
    const double norm = 1.0 / (static_cast<double>(c) * static_cast<double>(n));
    gm.noalias() = phi * phi.transpose();
    gm *= norm;
    // Mirror the upper triangle so the result is symmetric bit for bit.
    for (int a = 0; a < c; ++a)
        for (int b = a + 1; b < c; ++b) gm(b, a) = gm(a, b);
    return g;
}

void gram_backward(const Tensor& features, const Tensor& grad_gram, Tensor& grad_features) {
    const int c = features.channels();
    const auto n = static_cast<Eigen::Index>(features.plane());
    ConstMapMat phi(features.data(), c, n);
    ConstMapMat gg(grad_gram.data(), c, c);
    MapMat gf(grad_features.data(), c, n);
    const double norm = 1.0 / (static_cast<double>(c) * static_cast<double>(n));
    gf.noalias() += norm * (gg + gg.transpose()) * phi;
}

namespace {

void check_comatch(const Tensor& features, const Tensor& weight, const Tensor& target) {
    check_rank3(features, "comatch");
    const int c = features.channels();
    const std::vector<int> square{c, c};
    if (weight.shape() != square || target.shape() != square) {
        throw DimensionError("comatch: features have " + std::to_string(c) + " channels but W is " +
                             shape_string(weight.shape()) + " and target is " + shape_string(target.shape()));
    }
}

}  // namespace

Tensor comatch(const Tensor& features, const Tensor& weight, const Tensor& target) {
    check_comatch(features, weight, target);
    const int c = features.channels();
    const auto n = static_cast<Eigen::Index>(features.plane());
    ConstMapMat phi(features.data(), c, n);
    ConstMapMat wm(weight.data(), c, c);
    ConstMapMat gm(target.data(), c, c);
    Tensor y(features.shape());
    MapMat ym(y.data(), c, n);
    // (Phi^T W G)^T = (W G)^T Phi
    RowMat m = (wm * gm).transpose();
    ym.noalias() = m * phi;
    return y;
}

void comatch_backward(const Tensor& features, const Tensor& weight, const Tensor& target, const Tensor& grad_out,
                      Tensor* grad_features, Tensor* grad_weight) {
    const int c = features.channels();
    const auto n = static_cast<Eigen::Index>(features.plane());
    ConstMapMat phi(features.data(), c, n);
    ConstMapMat wm(weight.data(), c, c);
    ConstMapMat gm(target.data(), c, c);
    ConstMapMat gy(grad_out.data(), c, n);
    if (grad_features) {
        MapMat gf(grad_features->data(), c, n);
        gf.noalias() += (wm * gm) * gy;
    }
    if (grad_weight) {
        // dL/d(WG) = Phi gY^T, then dL/dW = Phi gY^T G^T.
        MapMat gw(grad_weight->data(), c, c);
        RowMat pg = phi * gy.transpose();
        gw.noalias() += pg * gm.transpose();
    }
}

double total_variation(const Tensor& image) {
    check_rank3(image, "tv");
    const int c = image.channels();
    const int h = image.height();
    const int w = image.width();
    double sum = 0.0;
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const double v = image.at(ch, y, x);
                if (y + 1 < h) {
                    const double d = image.at(ch, y + 1, x) - v;
                    sum += d * d;
                }
                if (x + 1 < w) {
                    const double d = image.at(ch, y, x + 1) - v;
                    sum += d * d;
                }
            }
    return sum;
}

void total_variation_backward(const Tensor& image, double grad_out, Tensor& grad_image) {
    const int c = image.channels();
    const int h = image.height();
    const int w = image.width();
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const double v = image.at(ch, y, x);
                if (y + 1 < h) {
                    const double d = 2.0 * grad_out * (image.at(ch, y + 1, x) - v);
                    grad_image.at(ch, y + 1, x) += d;
                    grad_image.at(ch, y, x) -= d;
                }
                if (x + 1 < w) {
                    const double d = 2.0 * grad_out * (image.at(ch, y, x + 1) - v);
                    grad_image.at(ch, y, x + 1) += d;
                    grad_image.at(ch, y, x) -= d;
                }
            }
}

}  // namespace thermoscope::nn::kernels
