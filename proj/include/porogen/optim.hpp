#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "porogen/autograd.hpp"

namespace porogen::nn {

// Constant base_lr for step < hold_steps, then a linear ramp reaching 0 at
// total_steps.
struct LrSchedule {
    double base_lr = 2e-4;
    std::int64_t hold_steps = 0;
    std::int64_t total_steps = 1;

    void validate() const;
};

double lr_at(std::int64_t step, const LrSchedule& schedule);

struct AdamState {
    AdamState(std::span<const Var> params, LrSchedule schedule);

    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    LrSchedule schedule;
    std::int64_t step = 0;
    std::vector<Tensor> first_moment;
    std::vector<Tensor> second_moment;
};

// One bias-corrected Adam update of params from their accumulated grads,
// using lr_at(state.step) before incrementing the step counter.
void adam_step(std::span<const Var> params, AdamState& state);

} // namespace porogen::nn
