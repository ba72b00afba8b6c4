#include "porogen/optim.hpp"

#include <cmath>

namespace porogen::nn {

void LrSchedule::validate() const {
    if (!(base_lr >= 0.0)) throw ValueError("learning rate must be nonnegative");
    if (hold_steps < 0) throw ValueError("hold_steps must be nonnegative");
    if (total_steps <= hold_steps) throw ValueError("total_steps must exceed hold_steps");
}

double lr_at(std::int64_t step, const LrSchedule& s) {
    s.validate();
    if (step < 0) throw ValueError("step must be nonnegative");
    if (step < s.hold_steps) return s.base_lr;
    if (step >= s.total_steps) return 0.0;
    const double remaining = static_cast<double>(s.total_steps - step);
    return s.base_lr * remaining / static_cast<double>(s.total_steps - s.hold_steps);
}

AdamState::AdamState(std::span<const Var> params, LrSchedule sched) : schedule(sched) {
    schedule.validate();
    for (const auto& p : params) {
        first_moment.emplace_back(p->value.shape(), 0.0);
        second_moment.emplace_back(p->value.shape(), 0.0);
    }
}

void adam_step(std::span<const Var> params, AdamState& state) {
    if (params.size() != state.first_moment.size()) throw ValueError("Adam state does not match parameter list");
    const double lr = lr_at(state.step, state.schedule);
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double correction1 = 1.0 - std::pow(state.beta1, t);
    const double correction2 = 1.0 - std::pow(state.beta2, t);
    for (std::size_t k = 0; k < params.size(); ++k) {
        Node& p = *params[k];
        if (p.value.shape() != state.first_moment[k].shape())
            throw ValueError("parameter shape changed since Adam state was created");
        if (p.grad.empty()) continue;
        auto m = state.first_moment[k].data();
        auto v = state.second_moment[k].data();
        auto theta = p.value.data();
        const auto g = p.grad.data();
        for (std::size_t i = 0; i < theta.size(); ++i) {
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
            const double mhat = m[i] / correction1;
            const double vhat = v[i] / correction2;
            theta[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
        }
    }
}

} // namespace porogen::nn
