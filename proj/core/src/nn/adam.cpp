#include "thermoscope/nn/adam.hpp"

#include <cmath>

#include "thermoscope/error.hpp"

namespace thermoscope::nn {

void Adam::step(ParameterList& params, double grad_scale) {
    if (m_.empty()) {
        for (const auto& p : params) {
            m_.emplace_back(p.value.shape());
            v_.emplace_back(p.value.shape());
        }
    }
    if (m_.size() != params.size()) throw StateError("Adam: parameter list changed between steps");
    ++t_;
    const double b1 = options_.beta1;
    const double b2 = options_.beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    const double lr = options_.learning_rate;
    for (std::size_t k = 0; k < params.size(); ++k) {
        Tensor& w = params[k].value;
        const Tensor& g = params[k].grad;
        if (g.empty()) continue;
        double* m = m_[k].data();
        double* v = v_[k].data();
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double gi = g[i] * grad_scale;
            m[i] = b1 * m[i] + (1.0 - b1) * gi;
            v[i] = b2 * v[i] + (1.0 - b2) * gi * gi;
            w[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + options_.eps);
        }
    }
}

}  // namespace thermoscope::nn
