#include "thermoscope/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "thermoscope/error.hpp"

namespace thermoscope::nn {

namespace {

Tensor& grad_of(Graph& g, Var v) { return g.grad_mut(v); }

}  // namespace

Var conv2d(Graph& g, Var x, Var weight, Var bias, int stride, int pad) {
    const kernels::ConvGeometry geo{stride, pad};
    const Tensor* b = bias.valid() ? &g.value(bias) : nullptr;
    Tensor y = kernels::conv2d(g.value(x), g.value(weight), b, geo);
    return g.emit(std::move(y), g.any_requires_grad({x, weight, bias}),
                  [x, weight, bias, geo](Graph& gr, const Tensor& gy) {
                      Tensor* gx = gr.requires_grad(x) ? &grad_of(gr, x) : nullptr;
                      Tensor* gw = gr.requires_grad(weight) ? &grad_of(gr, weight) : nullptr;
                      Tensor* gb = bias.valid() && gr.requires_grad(bias) ? &grad_of(gr, bias) : nullptr;
                      kernels::conv2d_backward(gr.value(x), gr.value(weight), gy, geo, gx, gw, gb);
                  });
}

Var relu(Graph& g, Var x) {
    Tensor y = g.value(x);
    for (double& v : y.values()) v = v > 0.0 ? v : 0.0;
    return g.emit(std::move(y), g.any_requires_grad({x}), [x](Graph& gr, const Tensor& gy) {
        const Tensor& xv = gr.value(x);
        Tensor& gx = grad_of(gr, x);
        for (std::size_t i = 0; i < gy.size(); ++i)
            if (xv[i] > 0.0) gx[i] += gy[i];
    });
}

Var sigmoid(Graph& g, Var x) {
    Tensor y = g.value(x);
    for (double& v : y.values()) v = 1.0 / (1.0 + std::exp(-v));
    const bool rg = g.any_requires_grad({x});
    Tensor saved = rg ? y : Tensor();
    return g.emit(std::move(y), rg, [x, saved = std::move(saved)](Graph& gr, const Tensor& gy) {
        Tensor& gx = grad_of(gr, x);
        for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i] * saved[i] * (1.0 - saved[i]);
    });
}

Var max_pool2(Graph& g, Var x) {
    const Tensor& xv = g.value(x);
    const int c = xv.channels();
    const int ho = xv.height() / 2;
    const int wo = xv.width() / 2;
    if (ho < 1 || wo < 1) throw DimensionError("max_pool2: input " + shape_string(xv.shape()) + " too small");
    Tensor y = Tensor::chw(c, ho, wo);
    std::vector<std::uint32_t> argmax(y.size());
    std::size_t o = 0;
    for (int ch = 0; ch < c; ++ch)
        for (int oy = 0; oy < ho; ++oy)
            for (int ox = 0; ox < wo; ++ox, ++o) {
                double best = -HUGE_VAL;
                std::uint32_t best_i = 0;
                for (int dy = 0; dy < 2; ++dy)
                    for (int dx = 0; dx < 2; ++dx) {
                        const auto idx = static_cast<std::uint32_t>(
                            (static_cast<std::size_t>(ch) * xv.height() + 2 * oy + dy) * xv.width() + 2 * ox + dx);
                        if (xv[idx] > best) {
                            best = xv[idx];
                            best_i = idx;
                        }
                    }
                y[o] = best;
                argmax[o] = best_i;
            }
    return g.emit(std::move(y), g.any_requires_grad({x}), [x, argmax = std::move(argmax)](Graph& gr, const Tensor& gy) {
        Tensor& gx = grad_of(gr, x);
        for (std::size_t i = 0; i < gy.size(); ++i) gx[argmax[i]] += gy[i];
    });
}

Var upsample_nearest2(Graph& g, Var x) {
    const Tensor& xv = g.value(x);
    const int c = xv.channels();
    const int h = xv.height();
    const int w = xv.width();
    Tensor y = Tensor::chw(c, 2 * h, 2 * w);
    for (int ch = 0; ch < c; ++ch)
        for (int yy = 0; yy < 2 * h; ++yy)
            for (int xx = 0; xx < 2 * w; ++xx) y.at(ch, yy, xx) = xv.at(ch, yy / 2, xx / 2);
    return g.emit(std::move(y), g.any_requires_grad({x}), [x](Graph& gr, const Tensor& gy) {
        Tensor& gx = grad_of(gr, x);
        for (int ch = 0; ch < gy.channels(); ++ch)
            for (int yy = 0; yy < gy.height(); ++yy)
                for (int xx = 0; xx < gy.width(); ++xx) gx.at(ch, yy / 2, xx / 2) += gy.at(ch, yy, xx);
    });
}

Var instance_norm(Graph& g, Var x, Var gamma, Var beta, double eps) {
    const Tensor& xv = g.value(x);
    const int c = xv.channels();
    const std::size_t n = xv.plane();
    const Tensor& gm = g.value(gamma);
    const Tensor& bt = g.value(beta);
    if (gm.size() != static_cast<std::size_t>(c) || bt.size() != static_cast<std::size_t>(c)) {
        throw DimensionError("instance_norm: affine size does not match channels");
    }
    Tensor xhat(xv.shape());
    Tensor y(xv.shape());
    std::vector<double> inv_std(static_cast<std::size_t>(c));
    for (int ch = 0; ch < c; ++ch) {
        const double* in = xv.data() + ch * n;
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += in[i];
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) var += (in[i] - mean) * (in[i] - mean);
        var /= static_cast<double>(n);
        const double is = 1.0 / std::sqrt(var + eps);
        inv_std[static_cast<std::size_t>(ch)] = is;
        double* xh = xhat.data() + ch * n;
        double* out = y.data() + ch * n;
        for (std::size_t i = 0; i < n; ++i) {
            xh[i] = (in[i] - mean) * is;
            out[i] = gm[static_cast<std::size_t>(ch)] * xh[i] + bt[static_cast<std::size_t>(ch)];
        }
    }
    const bool rg = g.any_requires_grad({x, gamma, beta});
    if (!rg) xhat = Tensor();
    return g.emit(std::move(y), rg,
                  [x, gamma, beta, xhat = std::move(xhat), inv_std = std::move(inv_std)](Graph& gr, const Tensor& gy) {
                      const int c = gy.channels();
                      const std::size_t n = gy.plane();
                      const Tensor& gm = gr.value(gamma);
                      Tensor* gx = gr.requires_grad(x) ? &grad_of(gr, x) : nullptr;
                      Tensor* gg = gr.requires_grad(gamma) ? &grad_of(gr, gamma) : nullptr;
                      Tensor* gb = gr.requires_grad(beta) ? &grad_of(gr, beta) : nullptr;
                      for (int ch = 0; ch < c; ++ch) {
                          const auto cu = static_cast<std::size_t>(ch);
                          const double* dy = gy.data() + cu * n;
                          const double* xh = xhat.data() + cu * n;
                          double sum_dy = 0.0;
                          double sum_dy_xh = 0.0;
                          for (std::size_t i = 0; i < n; ++i) {
                              sum_dy += dy[i];
                              sum_dy_xh += dy[i] * xh[i];
                          }
                          if (gg) (*gg)[cu] += sum_dy_xh;
                          if (gb) (*gb)[cu] += sum_dy;
                          if (gx) {
                              const double scale = gm[cu] * inv_std[cu] / static_cast<double>(n);
                              double* dx = gx->data() + cu * n;
                              for (std::size_t i = 0; i < n; ++i) {
                                  dx[i] += scale * (static_cast<double>(n) * dy[i] - sum_dy - xh[i] * sum_dy_xh);
                              }
                          }
                      }
                  });
}

Var add(Graph& g, Var a, Var b) {
    Tensor y = g.value(a);
    add_into(y, g.value(b));
    return g.emit(std::move(y), g.any_requires_grad({a, b}), [a, b](Graph& gr, const Tensor& gy) {
        if (gr.requires_grad(a)) add_into(grad_of(gr, a), gy);
        if (gr.requires_grad(b)) add_into(grad_of(gr, b), gy);
    });
}

Var channel_normalize(Graph& g, Var x, std::vector<double> shift, std::vector<double> scale) {
    Tensor y = g.value(x);
    const int c = y.channels();
    if (shift.size() != static_cast<std::size_t>(c) || scale.size() != static_cast<std::size_t>(c)) {
        throw DimensionError("channel_normalize: expected " + std::to_string(c) + " channel constants");
    }
    const std::size_t n = y.plane();
    for (int ch = 0; ch < c; ++ch) {
        double* p = y.data() + static_cast<std::size_t>(ch) * n;
        for (std::size_t i = 0; i < n; ++i) p[i] = (p[i] - shift[ch]) / scale[ch];
    }
    return g.emit(std::move(y), g.any_requires_grad({x}), [x, scale = std::move(scale)](Graph& gr, const Tensor& gy) {
        Tensor& gx = grad_of(gr, x);
        const std::size_t n = gy.plane();
        for (int ch = 0; ch < gy.channels(); ++ch)
            for (std::size_t i = 0; i < n; ++i) gx[ch * n + i] += gy[ch * n + i] / scale[ch];
    });
}

Var crop(Graph& g, Var x, int height, int width) {
    const Tensor& xv = g.value(x);
    if (height == xv.height() && width == xv.width()) return x;
    if (height > xv.height() || width > xv.width()) throw DimensionError("crop: target larger than input");
    Tensor y = Tensor::chw(xv.channels(), height, width);
    for (int c = 0; c < xv.channels(); ++c)
        for (int yy = 0; yy < height; ++yy)
            for (int xx = 0; xx < width; ++xx) y.at(c, yy, xx) = xv.at(c, yy, xx);
    return g.emit(std::move(y), g.any_requires_grad({x}), [x](Graph& gr, const Tensor& gy) {
        Tensor& gx = grad_of(gr, x);
        for (int c = 0; c < gy.channels(); ++c)
            for (int yy = 0; yy < gy.height(); ++yy)
                for (int xx = 0; xx < gy.width(); ++xx) gx.at(c, yy, xx) += gy.at(c, yy, xx);
    });
}

Var gram(Graph& g, Var features) {
    Tensor y = kernels::gram(g.value(features));
    return g.emit(std::move(y), g.any_requires_grad({features}), [features](Graph& gr, const Tensor& gy) {
        kernels::gram_backward(gr.value(features), gy, grad_of(gr, features));
    });
}

Var comatch(Graph& g, Var features, Var weight, const Tensor& target) {
    Tensor y = kernels::comatch(g.value(features), g.value(weight), target);
    return g.emit(std::move(y), g.any_requires_grad({features, weight}),
                  [features, weight, target](Graph& gr, const Tensor& gy) {
                      Tensor* gf = gr.requires_grad(features) ? &grad_of(gr, features) : nullptr;
                      Tensor* gw = gr.requires_grad(weight) ? &grad_of(gr, weight) : nullptr;
                      kernels::comatch_backward(gr.value(features), gr.value(weight), target, gy, gf, gw);
                  });
}

Var squared_distance(Graph& g, Var a, Var b) {
    const Tensor& av = g.value(a);
    const Tensor& bv = g.value(b);
    if (!av.same_shape(bv)) {
        throw DimensionError("squared_distance: " + shape_string(av.shape()) + " vs " + shape_string(bv.shape()));
    }
    double s = 0.0;
    for (std::size_t i = 0; i < av.size(); ++i) {
        const double d = av[i] - bv[i];
        s += d * d;
    }
    return g.emit(Tensor::scalar(s), g.any_requires_grad({a, b}), [a, b](Graph& gr, const Tensor& gy) {
        const Tensor& av = gr.value(a);
        const Tensor& bv = gr.value(b);
        const double k = 2.0 * gy[0];
        if (gr.requires_grad(a)) {
            Tensor& ga = grad_of(gr, a);
            for (std::size_t i = 0; i < av.size(); ++i) ga[i] += k * (av[i] - bv[i]);
        }
        if (gr.requires_grad(b)) {
            Tensor& gb = grad_of(gr, b);
            for (std::size_t i = 0; i < av.size(); ++i) gb[i] -= k * (av[i] - bv[i]);
        }
    });
}

Var total_variation(Graph& g, Var image) {
    const double tv = kernels::total_variation(g.value(image));
    return g.emit(Tensor::scalar(tv), g.any_requires_grad({image}), [image](Graph& gr, const Tensor& gy) {
        kernels::total_variation_backward(gr.value(image), gy[0], grad_of(gr, image));
    });
}

Var weighted_sum(Graph& g, const std::vector<Var>& terms, const std::vector<double>& weights) {
    if (terms.size() != weights.size()) throw DimensionError("weighted_sum: terms/weights size mismatch");
    double s = 0.0;
    bool rg = false;
    for (std::size_t i = 0; i < terms.size(); ++i) {
        if (g.value(terms[i]).size() != 1) throw DimensionError("weighted_sum: terms must be scalars");
        s += weights[i] * g.value(terms[i])[0];
        rg = rg || g.any_requires_grad({terms[i]});
    }
    return g.emit(Tensor::scalar(s), rg, [terms, weights](Graph& gr, const Tensor& gy) {
        for (std::size_t i = 0; i < terms.size(); ++i)
            if (gr.requires_grad(terms[i])) grad_of(gr, terms[i])[0] += weights[i] * gy[0];
    });
}

}  // namespace thermoscope::nn
