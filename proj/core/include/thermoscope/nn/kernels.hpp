#pragma once

#include "thermoscope/tensor.hpp"

// Graph-free numerical kernels. The autodiff ops and the public style API
// both call into these so the two paths cannot drift apart.
namespace thermoscope::nn::kernels {

struct ConvGeometry {
    int stride = 1;
    int pad = 0;
};

int conv_output_size(int input, int kernel, ConvGeometry g);

// x: (Cin, H, W); w: (Cout, Cin, k, k); bias: (Cout) or empty.
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor* bias, ConvGeometry g);
// Accumulates into whichever gradient pointers are non-null.
void conv2d_backward(const Tensor& x, const Tensor& w, const Tensor& grad_out, ConvGeometry g, Tensor* grad_x,
                     Tensor* grad_w, Tensor* grad_b);

// Phi(F) Phi(F)^T / (C H W), F of shape (C, H, W). Result shape (C, C).
Tensor gram(const Tensor& features);
// Accumulates d/dF given dL/dG.
void gram_backward(const Tensor& features, const Tensor& grad_gram, Tensor& grad_features);

// Y = Phi^-1[(Phi(F)^T W G)^T].
Tensor comatch(const Tensor& features, const Tensor& weight, const Tensor& target);
void comatch_backward(const Tensor& features, const Tensor& weight, const Tensor& target, const Tensor& grad_out,
                      Tensor* grad_features, Tensor* grad_weight);

// Anisotropic squared total variation summed over channels.
double total_variation(const Tensor& image);
void total_variation_backward(const Tensor& image, double grad_out, Tensor& grad_image);

}  // namespace thermoscope::nn::kernels
