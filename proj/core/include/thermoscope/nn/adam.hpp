#pragma once

#include <vector>

#include "thermoscope/nn/parameter.hpp"

namespace thermoscope::nn {

struct AdamOptions {
    double learning_rate = 1e-3;
    double beta1 = 0.9;  // the "momentum" knob
    double beta2 = 0.999;
    double eps = 1e-8;
};

class Adam {
public:
    explicit Adam(AdamOptions options) : options_(options) {}

    // Applies one update from p.grad to every parameter. grad_scale lets
    // callers average accumulated minibatch gradients.
    void step(ParameterList& params, double grad_scale = 1.0);

    long steps() const { return t_; }
    const AdamOptions& options() const { return options_; }

private:
    AdamOptions options_;
    long t_ = 0;
    std::vector<Tensor> m_;
    std::vector<Tensor> v_;
};

}  // namespace thermoscope::nn
