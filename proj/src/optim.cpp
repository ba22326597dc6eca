#include "autorecon/optim.hpp"

#include "autorecon/error.hpp"

#include <cmath>

namespace autorecon {

AdamState make_adam_state(std::span<const Tensor> targets, double learning_rate) {
    if (!(learning_rate > 0.0)) {
        throw ValidationError("learning rate must be positive");
    }
    AdamState state;
    state.learning_rate = learning_rate;
    for (const Tensor& t : targets) {
        state.first_moment.push_back(Tensor::Zero(t.rows(), t.cols()));
        state.second_moment.push_back(Tensor::Zero(t.rows(), t.cols()));
    }
    return state;
}

void adam_step(AdamState& state, std::span<Tensor> targets, std::span<const Tensor> grads) {
    if (grads.size() != targets.size()) {
        throw ValidationError("adam_step: " + std::to_string(targets.size()) + " targets but " +
                              std::to_string(grads.size()) + " gradients");
    }
    if (state.first_moment.size() != targets.size()) {
        throw ValidationError("adam_step: optimizer state does not match targets");
    }
    for (std::size_t k = 0; k < targets.size(); ++k) {
        if (grads[k].rows() != targets[k].rows() || grads[k].cols() != targets[k].cols() ||
            state.first_moment[k].rows() != targets[k].rows() || state.first_moment[k].cols() != targets[k].cols()) {
            throw ValidationError("adam_step: gradient " + shape_string(grads[k]) + " does not match target " +
                                  shape_string(targets[k]));
        }
    }

    ++state.step;
    const double t = static_cast<double>(state.step);
    const double correction1 = 1.0 - std::pow(state.beta1, t);
    const double correction2 = 1.0 - std::pow(state.beta2, t);
    for (std::size_t k = 0; k < targets.size(); ++k) {
        auto m = state.first_moment[k].array();
        auto v = state.second_moment[k].array();
        const auto g = grads[k].array();
        m = state.beta1 * m + (1.0 - state.beta1) * g;
        v = state.beta2 * v + (1.0 - state.beta2) * g.square();
        targets[k].array() -=
            state.learning_rate * (m / correction1) / ((v / correction2).sqrt() + state.epsilon);
    }
}

}  // namespace autorecon
