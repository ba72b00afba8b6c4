#pragma once

#include <functional>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "porogen/tensor.hpp"

namespace porogen::nn {

class Node;
using Var = std::shared_ptr<Node>;

// One value in a dynamically recorded computation. Interior nodes own their
// parents, so keeping the output alive keeps the whole graph alive.
class Node {
public:
    Tensor value;
    Tensor grad; // allocated lazily during backward
    bool requires_grad = false;
    std::vector<Var> parents;
    // Reads this->grad, accumulates into parents' grads.
    std::function<void(Node&)> backward_fn;

    Tensor& grad_buffer();
};

// Leaf that accumulates gradient across backward passes until zero_grad.
Var parameter(Tensor value);
// Leaf that never receives gradient.
Var constant(Tensor value);

// Interior node; requires_grad is inherited from the parents.
Var make_node(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backward_fn);

// Reverse sweep from one or more roots, each seeded with d(loss)/d(root).
void backward(std::span<const std::pair<Var, Tensor>> seeds);
void backward(const Var& root, const Tensor& seed);

void zero_grad(std::span<const Var> params);

// Toggles whether parameters take part in later forward passes' gradients.
void set_trainable(std::span<const Var> params, bool trainable);

} // namespace porogen::nn
