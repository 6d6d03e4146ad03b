#include "thermoscope/nn/graph.hpp"

#include <cmath>

#include "thermoscope/error.hpp"

namespace thermoscope::nn {

Tensor he_normal(std::vector<int> shape, Rng& rng) {
    Tensor t(std::move(shape));
    int fan_in = 1;
    for (int i = 1; i < t.rank(); ++i) fan_in *= t.dim(i);
    const double stddev = std::sqrt(2.0 / fan_in);
    for (double& v : t.values()) v = normal(rng) * stddev;
    return t;
}

void zero_grads(ParameterList& params) {
    for (auto& p : params) p.zero_grad();
}

std::size_t parameter_count(const ParameterList& params) {
    std::size_t n = 0;
    for (const auto& p : params) n += p.value.size();
    return n;
}

Parameter& find_parameter(ParameterList& params, const std::string& name) {
    for (auto& p : params)
        if (p.name == name) return p;
    throw StateError("no parameter named '" + name + "'");
}

const Parameter& find_parameter(const ParameterList& params, const std::string& name) {
    for (const auto& p : params)
        if (p.name == name) return p;
    throw StateError("no parameter named '" + name + "'");
}

Var Graph::input(Tensor value, bool requires_grad) {
    Node n;
    n.owned = std::move(value);
    n.requires_grad = requires_grad && record_;
    nodes_.push_back(std::move(n));
    return Var{nodes_.size() - 1};
}

Var Graph::parameter(Parameter& p) {
    Node n;
    n.ref = &p.value;
    n.requires_grad = record_;
    n.sink = &p.grad;
    nodes_.push_back(std::move(n));
    return Var{nodes_.size() - 1};
}

Var Graph::constant(const Tensor& value) {
    Node n;
    n.ref = &value;
    nodes_.push_back(std::move(n));
    return Var{nodes_.size() - 1};
}

const Tensor& Graph::value(Var v) const {
    const Node& n = node(v);
    return n.ref ? *n.ref : n.owned;
}

Tensor& Graph::grad_mut(Var v) {
    Node& n = node(v);
    if (n.grad.empty()) n.grad = Tensor(value(v).shape());
    return n.grad;
}

Var Graph::emit(Tensor value, bool requires_grad, Pullback pullback) {
    Node n;
    n.owned = std::move(value);
    n.requires_grad = requires_grad && record_;
    if (n.requires_grad) n.pullback = std::move(pullback);
    nodes_.push_back(std::move(n));
    return Var{nodes_.size() - 1};
}

bool Graph::any_requires_grad(std::initializer_list<Var> vars) const {
    if (!record_) return false;
    for (Var v : vars)
        if (v.valid() && node(v).requires_grad) return true;
    return false;
}

void Graph::backward(Var output, double seed) {
    if (!record_) throw StateError("backward() on a graph built without recording");
    if (value(output).size() != 1) throw DimensionError("backward() needs a scalar output");
    for (auto& n : nodes_) n.grad = Tensor();
    grad_mut(output)[0] = seed;
    for (std::size_t i = output.id + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (n.grad.empty() || !n.requires_grad) continue;
        if (n.pullback) n.pullback(*this, n.grad);
        if (n.sink) {
            if (n.sink->empty()) *n.sink = Tensor(n.grad.shape());
            add_into(*n.sink, n.grad);
        }
    }
}

}  // namespace thermoscope::nn
