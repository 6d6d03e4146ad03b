#pragma once

#include <string>
#include <vector>

#include "thermoscope/random.hpp"
#include "thermoscope/tensor.hpp"

namespace thermoscope::nn {

struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;

    Parameter() = default;
    Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

    void zero_grad() { grad.fill(0.0); }
};

using ParameterList = std::vector<Parameter>;

// He-normal initialisation for a conv weight of shape (out, in, k, k).
Tensor he_normal(std::vector<int> shape, Rng& rng);

void zero_grads(ParameterList& params);
std::size_t parameter_count(const ParameterList& params);
Parameter& find_parameter(ParameterList& params, const std::string& name);
const Parameter& find_parameter(const ParameterList& params, const std::string& name);

}  // namespace thermoscope::nn
