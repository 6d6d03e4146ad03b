#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <limits>
#include <vector>

#include "thermoscope/nn/parameter.hpp"
#include "thermoscope/tensor.hpp"

namespace thermoscope::nn {

struct Var {
    std::size_t id = std::numeric_limits<std::size_t>::max();
    bool valid() const { return id != std::numeric_limits<std::size_t>::max(); }
};

// Reverse-mode tape. Nodes are appended in evaluation order; backward()
// walks them in reverse and calls each node's pullback. A graph created
// with record=false never stores pullbacks (inference mode).
class Graph {
public:
    using Pullback = std::function<void(Graph&, const Tensor& grad_out)>;

    explicit Graph(bool record = true) : record_(record) {}
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    bool recording() const { return record_; }

    Var input(Tensor value, bool requires_grad = false);
    // Reads p.value by reference; gradients accumulate into p.grad.
    Var parameter(Parameter& p);
    // Reads the tensor by reference and never receives gradients.
    Var constant(const Tensor& value);

    const Tensor& value(Var v) const;
    bool requires_grad(Var v) const { return node(v).requires_grad; }
    // Gradient of the last backward() target; zero-shaped if never reached.
    const Tensor& grad(Var v) const { return node(v).grad; }
    Tensor& grad_mut(Var v);

    // Adds a node whose value is already computed. The pullback is kept only
    // when recording and at least one input requires grad.
    Var emit(Tensor value, bool requires_grad, Pullback pullback);
    bool any_requires_grad(std::initializer_list<Var> vars) const;

    void backward(Var output, double seed = 1.0);

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Tensor owned;
        const Tensor* ref = nullptr;
        Tensor grad;
        Tensor* sink = nullptr;
        bool requires_grad = false;
        Pullback pullback;
    };

    const Node& node(Var v) const { return nodes_.at(v.id); }
    Node& node(Var v) { return nodes_.at(v.id); }

    bool record_;
    std::deque<Node> nodes_;
};

}  // namespace thermoscope::nn
