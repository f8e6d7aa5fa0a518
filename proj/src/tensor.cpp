// Copyright (c) 2026, The jedssl Authors
// SPDX-License-Identifier: Apache-2.0

#include "jedssl/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>
#include <utility>

namespace jedssl::ad {

namespace {
thread_local bool g_grad_enabled = true;
}

std::size_t numel(const Shape& shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

std::string to_string(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ", ";
        os << shape[i];
    }
    os << ']';
    return os.str();
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

template <class T>
Tensor<T> Tensor<T>::zeros(Shape shape, bool requires_grad) {
    return full(std::move(shape), T(0), requires_grad);
}

template <class T>
Tensor<T> Tensor<T>::full(Shape shape, T value, bool requires_grad) {
    auto n = ad::numel(shape);
    return from(std::move(shape), std::vector<T>(n, value), requires_grad);
}

template <class T>
Tensor<T> Tensor<T>::from(Shape shape, std::vector<T> data, bool requires_grad) {
    if (shape.empty()) throw ShapeError("tensor: shape must have at least one axis");
    for (auto d : shape) {
        if (d == 0) throw ShapeError("tensor: zero extent in shape " + to_string(shape));
    }
    if (ad::numel(shape) != data.size()) {
        throw ShapeError("tensor: shape " + to_string(shape) + " holds " + std::to_string(ad::numel(shape)) +
                         " elements but data has " + std::to_string(data.size()));
    }
    auto node = std::make_shared<Node<T>>();
    node->shape = std::move(shape);
    node->value = std::move(data);
    node->requires_grad = requires_grad;
    return Tensor(std::move(node));
}

template <class T>
Tensor<T> Tensor<T>::scalar(T value) {
    return from({1}, {value});
}

template <class T>
void Tensor<T>::zero_grad() {
    std::fill(node_->grad.begin(), node_->grad.end(), T(0));
}

template <class T>
T Tensor<T>::item() const {
    if (numel() != 1) throw ShapeError("item: tensor of shape " + to_string(shape()) + " is not a scalar");
    return node_->value[0];
}

template <class T>
T Tensor<T>::at(std::size_t row, std::size_t col) const {
    if (rank() != 2) throw ShapeError("at(row, col): tensor of shape " + to_string(shape()) + " is not 2-D");
    return node_->value.at(row * node_->shape[1] + col);
}

template <class T>
Tensor<T> Tensor<T>::detach() const {
    return from(node_->shape, node_->value, false);
}

template <class T>
void Tensor<T>::backward() const {
    if (numel() != 1) {
        throw ShapeError("backward: loss must be a scalar, got shape " + to_string(shape()));
    }
    if (!node_->requires_grad) {
        throw std::logic_error("backward: loss does not depend on any tensor that requires grad");
    }
    auto tape = Tape<T>::record(*this);
    // Interior gradients are scratch space for this traversal only.
    for (auto* n : tape.nodes()) {
        if (!n->is_leaf()) n->grad.assign(n->value.size(), T(0));
    }
    node_->grad_buffer()[0] += T(1);
    const auto& order = tape.nodes();
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if (!(*it)->is_leaf()) (*it)->backward(**it);
    }
}

template <class T>
Tape<T> Tape<T>::record(const Tensor<T>& root) {
    Tape tape;
    if (!root.defined() || !root.requires_grad()) return tape;
    std::unordered_set<const Node<T>*> visited;
    // Iterative post-order DFS.
    std::vector<std::pair<Node<T>*, std::size_t>> stack;
    stack.emplace_back(root.node(), 0);
    visited.insert(root.node());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->inputs.size()) {
            Node<T>* child = node->inputs[next++].get();
            if (child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
        } else {
            tape.order_.push_back(node);
            stack.pop_back();
        }
    }
    return tape;
}

template class Tensor<float>;
template class Tensor<double>;
template class Tape<float>;
template class Tape<double>;

}  // namespace jedssl::ad
