#include "porogen/autograd.hpp"

#include <unordered_set>

namespace porogen::nn {

Tensor& Node::grad_buffer() {
    if (grad.shape() != value.shape()) grad = Tensor(value.shape(), 0.0);
    return grad;
}

Var parameter(Tensor value) {
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    node->requires_grad = true;
    return node;
}

Var constant(Tensor value) {
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    return node;
}

Var make_node(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backward_fn) {
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    for (const auto& p : parents) node->requires_grad = node->requires_grad || p->requires_grad;
    node->parents = std::move(parents);
    if (node->requires_grad) node->backward_fn = std::move(backward_fn);
    return node;
}

void backward(std::span<const std::pair<Var, Tensor>> seeds) {
    // Iterative post-order DFS; reversed it is a topological order.
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, std::size_t>> stack;
    for (const auto& [root, seed] : seeds) {
        if (!root->requires_grad) continue;
        if (seed.shape() != root->value.shape())
            throw ValueError("backward seed shape " + seed.shape().str() + " does not match " + root->value.shape().str());
        root->grad_buffer() += seed;
        if (!visited.insert(root.get()).second) continue;
        stack.emplace_back(root.get(), 0);
        while (!stack.empty()) {
            auto& [node, next] = stack.back();
            if (next < node->parents.size()) {
                Node* parent = node->parents[next++].get();
                if (parent->requires_grad && visited.insert(parent).second) stack.emplace_back(parent, 0);
            } else {
                order.push_back(node);
                stack.pop_back();
            }
        }
    }
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* node = *it;
        if (!node->backward_fn) continue; // leaf
        if (node->grad.empty()) continue;  // nothing flowed here
        for (const auto& p : node->parents)
            if (p->requires_grad) p->grad_buffer();
        node->backward_fn(*node);
        node->grad = Tensor(); // interior gradients are consumed once
    }
}

void backward(const Var& root, const Tensor& seed) {
    const std::pair<Var, Tensor> s[] = {{root, seed}};
    backward(s);
}

void zero_grad(std::span<const Var> params) {
    for (const auto& p : params)
        if (!p->grad.empty()) p->grad.fill(0.0);
}

void set_trainable(std::span<const Var> params, bool trainable) {
    for (const auto& p : params) p->requires_grad = trainable;
}

} // namespace porogen::nn
