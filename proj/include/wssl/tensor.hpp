// Copyright (c) 2026, The WSSL Authors
// SPDX-License-Identifier: Apache-2.0
//
// Dense row-major tensors with define-by-run reverse-mode differentiation.
//
// A BasicTensor is a cheap handle onto a shared graph node. Ops that receive at
// least one input with requires_grad() record their inputs and a backward rule
// on the output node; backward() walks the recorded graph in reverse
// topological order and then releases it. The scalar type is a template
// parameter: training runs in float, gradient checks run in double.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "wssl/error.hpp"

namespace wssl {

using Shape = std::vector<std::size_t>;

inline std::size_t numel(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

inline std::string to_string(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
    os << ']';
    return os.str();
}

template <class T>
struct Node {
    Shape shape;
    std::vector<T> data;
    std::vector<T> grad;
    bool requires_grad = false;
    std::string_view op = "leaf";
    std::vector<std::shared_ptr<Node>> inputs;
    // Reads self.grad and accumulates into the grads of self.inputs.
    std::function<void(Node&)> backward;
    // Discrete choices made by non-smooth ops (relu signs, pool argmax).
    // Gradient checks compare these to detect probes that straddle a kink.
    std::vector<std::uint32_t> decisions;

    bool is_leaf() const { return inputs.empty(); }
};

namespace detail {

template <class T>
bool all_finite(std::span<const T> values) {
    return std::all_of(values.begin(), values.end(), [](T v) { return std::isfinite(v); });
}

template <class T>
void require_finite(std::span<const T> values, std::string_view where) {
    if (!all_finite(values)) throw NumericError("non-finite value in " + std::string(where));
}

inline void validate_shape(const Shape& shape) {
    if (shape.empty()) throw ShapeError("tensor shape must have at least one dimension");
    for (auto d : shape)
        if (d == 0) throw ShapeError("tensor dimensions must be positive, got " + to_string(shape));
}

} // namespace detail

template <class T>
class BasicTensor {
public:
    using value_type = T;

    BasicTensor() = default;

    explicit BasicTensor(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

    static BasicTensor from(Shape shape, std::vector<T> data, bool requires_grad = false) {
        detail::validate_shape(shape);
        if (numel(shape) != data.size())
            throw ShapeError("data length " + std::to_string(data.size()) + " does not match shape " +
                             to_string(shape));
        detail::require_finite<T>(data, "tensor construction");
        auto node = std::make_shared<Node<T>>();
        node->shape = std::move(shape);
        node->data = std::move(data);
        node->requires_grad = requires_grad;
        if (requires_grad) node->grad.assign(node->data.size(), T{0});
        return BasicTensor(std::move(node));
    }

    static BasicTensor full(Shape shape, T value, bool requires_grad = false) {
        auto n = numel(shape);
        return from(std::move(shape), std::vector<T>(n, value), requires_grad);
    }

    static BasicTensor zeros(Shape shape, bool requires_grad = false) {
        return full(std::move(shape), T{0}, requires_grad);
    }

    static BasicTensor scalar(T value, bool requires_grad = false) { return from({1}, {value}, requires_grad); }

    explicit operator bool() const { return static_cast<bool>(node_); }

    const Shape& shape() const { return node_->shape; }
    std::size_t dim(std::size_t i) const { return node_->shape.at(i); }
    std::size_t rank() const { return node_->shape.size(); }
    std::size_t size() const { return node_->data.size(); }
    bool is_scalar() const { return size() == 1; }

    std::span<const T> data() const { return node_->data; }
    /// Direct write access; reserved for parameter initialisation and optimizers.
    std::span<T> mutable_data() { return node_->data; }
    T operator[](std::size_t i) const { return node_->data[i]; }
    T item() const {
        if (!is_scalar()) throw ShapeError("item() on non-scalar tensor " + to_string(shape()));
        return node_->data[0];
    }

    bool requires_grad() const { return node_->requires_grad; }
    void set_requires_grad(bool on) {
        node_->requires_grad = on;
        if (on && node_->grad.size() != size()) node_->grad.assign(size(), T{0});
    }

    bool has_grad() const { return node_->grad.size() == size(); }
    std::span<const T> grad() const { return node_->grad; }
    void zero_grad() {
        if (node_->requires_grad) node_->grad.assign(size(), T{0});
    }

    /// Copy of the values, cut from any graph.
    BasicTensor detach(bool requires_grad = false) const {
        return from(shape(), node_->data, requires_grad);
    }

    template <class U>
    BasicTensor<U> cast(bool requires_grad = false) const {
        std::vector<U> out(node_->data.begin(), node_->data.end());
        return BasicTensor<U>::from(shape(), std::move(out), requires_grad);
    }

    std::string_view op() const { return node_->op; }
    Node<T>& node() const { return *node_; }
    const std::shared_ptr<Node<T>>& node_ptr() const { return node_; }

private:
    std::shared_ptr<Node<T>> node_;
};

/// Nodes reachable from root, every node after all of its inputs.
template <class T>
std::vector<Node<T>*> topological_order(const BasicTensor<T>& root) {
    std::vector<Node<T>*> order;
    std::unordered_set<Node<T>*> visited;
    // Iterative post-order DFS: deep UNet graphs would overflow the call stack.
    std::vector<std::pair<Node<T>*, std::size_t>> stack;
    stack.emplace_back(&root.node(), 0);
    visited.insert(&root.node());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->inputs.size()) {
            Node<T>* child = node->inputs[next++].get();
            if (visited.insert(child).second) stack.emplace_back(child, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    return order;
}

/// Reverse sweep from a scalar loss. Leaf gradients accumulate across calls
/// (callers zero them between steps); intermediate gradients are rebuilt.
/// With free_graph the recorded edges are released afterwards.
template <class T>
void backward(const BasicTensor<T>& loss, bool free_graph = true) {
    if (!loss) throw ShapeError("backward on empty tensor");
    if (!loss.is_scalar()) throw ShapeError("backward requires a scalar loss, got " + to_string(loss.shape()));
    auto order = topological_order(loss);
    for (auto* node : order) {
        if (!node->requires_grad) continue;
        if (!node->is_leaf() || node->grad.size() != node->data.size())
            node->grad.assign(node->data.size(), T{0});
    }
    if (!loss.requires_grad()) return;
    loss.node().grad[0] += T{1};
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node<T>* node = *it;
        if (!node->requires_grad || node->is_leaf() || !node->backward) continue;
        detail::require_finite<T>(node->grad, std::string("gradient of ") + std::string(node->op));
        node->backward(*node);
    }
    for (auto* node : order)
        if (node->requires_grad && node->is_leaf())
            detail::require_finite<T>(node->grad, "leaf gradient");
    if (free_graph) {
        for (auto* node : order) {
            if (node->is_leaf()) continue;
            node->backward = nullptr;
            node->inputs.clear();
        }
    }
}

using Tensor = BasicTensor<float>;
using TensorD = BasicTensor<double>;

} // namespace wssl
