#pragma once

#include "autorecon/autodiff.hpp"
#include "autorecon/error.hpp"

#include <span>
#include <vector>

namespace autorecon {

/// Mean over all elements of the squared difference, recorded on the tape.
template <typename Scalar>
BasicVar<Scalar> mse(const BasicVar<Scalar>& a, const BasicVar<Scalar>& b) {
    return mean_squared_difference(a, b);
}

/// Sum over columns of the per-column MSE between reconstruction and target:
///   L = sum_j w_j * mean_r (recon(r, j) - target(r, j))^2
/// Both arguments hold only the available features, one per column. Weights
/// default to 1; when given there must be one per column.
template <typename Scalar>
BasicVar<Scalar> reduced_loss(const BasicVar<Scalar>& target, const BasicVar<Scalar>& reconstruction,
                              std::span<const double> weights = {}) {
    const Index features = target.cols();
    if (features < 1) {
        throw ValidationError("reduced_loss: at least one available feature is required");
    }
    if (reconstruction.rows() != target.rows() || reconstruction.cols() != features) {
        throw ValidationError("reduced_loss: shape mismatch " + shape_string(target.rows(), target.cols()) +
                              " vs " + shape_string(reconstruction.rows(), reconstruction.cols()));
    }
    if (!weights.empty() && static_cast<Index>(weights.size()) != features) {
        throw ValidationError("reduced_loss: expected " + std::to_string(features) + " weights, got " +
                              std::to_string(weights.size()));
    }
    BasicVar<Scalar> total;
    for (Index j = 0; j < features; ++j) {
        BasicVar<Scalar> term = mse(slice_cols(reconstruction, j, 1), slice_cols(target, j, 1));
        if (!weights.empty() && weights[static_cast<std::size_t>(j)] != 1.0) {
            term = scale(term, weights[static_cast<std::size_t>(j)]);
        }
        total = j == 0 ? term : total + term;
    }
    return total;
}

/// Keeps the listed columns of `x`, in order.
template <typename Scalar>
BasicVar<Scalar> select_columns(const BasicVar<Scalar>& x, std::span<const Index> columns) {
    if (columns.empty()) {
        throw ValidationError("select_columns: no columns");
    }
    std::vector<BasicVar<Scalar>> parts;
    parts.reserve(columns.size());
    for (const Index j : columns) {
        parts.push_back(slice_cols(x, j, 1));
    }
    return parts.size() == 1 ? parts.front() : concat_cols(parts);
}

/// Adam with bias correction. beta1, beta2 and epsilon are the usual defaults.
struct AdamState {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    long step = 0;
    std::vector<Tensor> first_moment;
    std::vector<Tensor> second_moment;
};

/// Zeroed moment accumulators shaped like `targets`.
AdamState make_adam_state(std::span<const Tensor> targets, double learning_rate);

/// One update of every target from its gradient:
///   m = b1 m + (1 - b1) g,  v = b2 v + (1 - b2) g^2
///   x -= lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
void adam_step(AdamState& state, std::span<Tensor> targets, std::span<const Tensor> grads);

}  // namespace autorecon
