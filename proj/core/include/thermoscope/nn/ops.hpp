#pragma once

#include <vector>

#include "thermoscope/nn/graph.hpp"
#include "thermoscope/nn/kernels.hpp"

namespace thermoscope::nn {

// bias may be an invalid Var (no bias).
Var conv2d(Graph& g, Var x, Var weight, Var bias, int stride, int pad);
Var relu(Graph& g, Var x);
Var sigmoid(Graph& g, Var x);
Var max_pool2(Graph& g, Var x);
Var upsample_nearest2(Graph& g, Var x);
Var instance_norm(Graph& g, Var x, Var gamma, Var beta, double eps = 1e-5);
Var add(Graph& g, Var a, Var b);
// y[c] = (x[c] - shift[c]) / scale[c]
Var channel_normalize(Graph& g, Var x, std::vector<double> shift, std::vector<double> scale);
Var crop(Graph& g, Var x, int height, int width);

Var gram(Graph& g, Var features);
// target is treated as a constant of the call.
Var comatch(Graph& g, Var features, Var weight, const Tensor& target);

// Scalar ops (shape (1)).
Var squared_distance(Graph& g, Var a, Var b);
Var total_variation(Graph& g, Var image);
Var weighted_sum(Graph& g, const std::vector<Var>& terms, const std::vector<double>& weights);

}  // namespace thermoscope::nn
