#include "autorecon/reconstruct.hpp"

#include "autorecon/error.hpp"
#include "autorecon/optim.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace autorecon {

int default_reconstruction_epochs(std::size_t missing_count) { return missing_count > 1 ? 3000 : 300; }

int ReconstructionSpec::resolved_epochs() const {
    return epochs.value_or(default_reconstruction_epochs(missing.size()));
}

ReducedLossProblem::ReducedLossProblem(const TrainedModel& model, const TimeSeriesSet& data,
                                       std::vector<std::string> missing,
                                       const std::map<std::string, double>& weights)
    : model_(&model), missing_(std::move(missing)) {
    const auto& names = model.feature_names();
    const Index n = static_cast<Index>(names.size());
    if (missing_.empty()) {
        throw ValidationError("at least one missing feature is required");
    }
    if (std::set<std::string>(missing_.begin(), missing_.end()).size() != missing_.size()) {
        throw ValidationError("missing features listed twice");
    }
    for (const auto& name : missing_) {
        const auto it = std::find(names.begin(), names.end(), name);
        if (it == names.end()) {
            throw ValidationError("unknown feature '" + name + "'");
        }
        missing_columns_.push_back(static_cast<Index>(it - names.begin()));
    }
    if (static_cast<Index>(missing_.size()) >= n) {
        throw ValidationError("all features are missing; at least one must be available");
    }
    for (Index j = 0; j < n; ++j) {
        if (std::find(missing_columns_.begin(), missing_columns_.end(), j) == missing_columns_.end()) {
            available_columns_.push_back(j);
        }
    }
    for (const auto& [name, w] : weights) {
        const auto it = std::find(names.begin(), names.end(), name);
        if (it == names.end()) {
            throw ValidationError("weight given for unknown feature '" + name + "'");
        }
        if (std::find(missing_.begin(), missing_.end(), name) != missing_.end()) {
            throw ValidationError("weight given for missing feature '" + name + "'");
        }
        if (!(w >= 0.0) || !std::isfinite(w)) {
            throw ValidationError("weight for '" + name + "' must be finite and non-negative");
        }
    }
    for (const Index j : available_columns_) {
        const auto it = weights.find(names[static_cast<std::size_t>(j)]);
        weights_.push_back(it == weights.end() ? 1.0 : it->second);
    }

    data.validate();
    const Index length = data.length();
    if (length < model.config.seq_len) {
        throw ValidationError("dataset length " + std::to_string(length) + " shorter than window " +
                              std::to_string(model.config.seq_len));
    }
    scaled_.feature_names = names;
    scaled_.t0 = data.t0;
    scaled_.dt = data.dt;
    scaled_.values = Tensor::Zero(length, n);
    for (const Index j : available_columns_) {
        const std::string& name = names[static_cast<std::size_t>(j)];
        if (!data.has_feature(name)) {
            throw ValidationError("dataset lacks available feature '" + name + "'");
        }
        const auto column = data.values.col(data.index_of(name));
        for (Index r = 0; r < length; ++r) {
            scaled_.values(r, j) = model.scaler.transform_value(j, column(r));
        }
    }
    known_ = scaled_.values;

    const WindowBatch batch = sliding_windows(known_, model.config.seq_len);
    const Index count = batch.num_windows();
    target_.resize(batch.seq_len * count, static_cast<Index>(available_columns_.size()));
    for (Index t = 0; t < batch.seq_len; ++t) {
        const Tensor step = batch.step(t);
        for (std::size_t k = 0; k < available_columns_.size(); ++k) {
            target_.block(t * count, static_cast<Index>(k), count, 1) = step.col(available_columns_[k]);
        }
    }
}

std::vector<Tensor> ReducedLossProblem::initial_guess(InitMode mode) const {
    const double value = mode == InitMode::Zeros ? 0.0 : 0.5;
    return std::vector<Tensor>(missing_.size(), Tensor::Constant(length(), 1, value));
}

double ReducedLossProblem::loss_value(std::span<const Tensor> x_miss) const {
    Tape tape;
    std::vector<Var> leaves;
    for (const Tensor& x : x_miss) {
        leaves.push_back(tape.constant(x));
    }
    return loss(tape, std::span<const Var>(leaves)).value()(0, 0);
}

Tensor ReducedLossProblem::assemble(std::span<const Tensor> x_miss) const {
    Tensor full = known_;
    for (std::size_t k = 0; k < missing_columns_.size(); ++k) {
        full.col(missing_columns_[k]) = x_miss[k];
    }
    return full;
}

namespace {

/// Overlap-mean network output for a scaled series in model order.
Tensor refine_scaled(const TrainedModel& model, const Tensor& scaled) {
    return overlap_mean(forward_batch(model.params, sliding_windows(scaled, model.config.seq_len)));
}

}  // namespace

ReconstructionResult reconstruct(const TrainedModel& model, const TimeSeriesSet& data,
                                 const ReconstructionSpec& spec) {
    const int epochs = spec.resolved_epochs();
    if (epochs < 1) {
        throw ValidationError("reconstruction epochs must be >= 1");
    }
    const ReducedLossProblem problem(model, data, spec.missing, spec.weights);
    std::vector<Tensor> x = problem.initial_guess(spec.init);
    AdamState adam = make_adam_state(x, spec.learning_rate);

    ReconstructionResult result;
    result.missing = spec.missing;
    result.t0 = data.t0;
    result.dt = data.dt;
    result.loss_history.reserve(static_cast<std::size_t>(epochs));

    for (int epoch = 0; epoch < epochs; ++epoch) {
        Tape tape;
        std::vector<Var> leaves;
        for (const Tensor& column : x) {
            leaves.push_back(tape.leaf(column, true));
        }
        std::vector<Tensor> grads;
        double value = 0.0;
        try {
            const Var loss = problem.loss(tape, std::span<const Var>(leaves));
            value = loss.value()(0, 0);
            const Gradients g = tape.backward(loss);
            for (const Var& leaf : leaves) {
                grads.push_back(g[leaf]);
            }
        } catch (const NumericalError& e) {
            throw NumericalError("reconstruction diverged at epoch " + std::to_string(epoch) + ": " + e.what());
        }
        result.loss_history.push_back(value);
        adam_step(adam, x, grads);
    }
    result.initial_loss = result.loss_history.front();
    result.final_loss = problem.loss_value(x);

    const Index length = problem.length();
    const Index k = static_cast<Index>(x.size());
    result.x_miss.resize(length, k);
    result.x_hat_miss.resize(length, k);
    const Tensor refined = refine_scaled(model, problem.assemble(x));
    for (Index c = 0; c < k; ++c) {
        const Index j = problem.missing_columns()[static_cast<std::size_t>(c)];
        for (Index r = 0; r < length; ++r) {
            result.x_miss(r, c) = model.scaler.inverse_value(j, x[static_cast<std::size_t>(c)](r, 0));
            result.x_hat_miss(r, c) = model.scaler.inverse_value(j, refined(r, j));
        }
    }
    return result;
}

Tensor refine(const TrainedModel& model, const TimeSeriesSet& full, std::span<const std::string> features) {
    const TimeSeriesSet aligned = align_features(model, full);
    const TimeSeriesSet scaled = transform(model.scaler, aligned);
    const Tensor refined = refine_scaled(model, scaled.values);
    Tensor out(aligned.length(), static_cast<Index>(features.size()));
    for (std::size_t c = 0; c < features.size(); ++c) {
        const Index j = aligned.index_of(features[c]);
        for (Index r = 0; r < aligned.length(); ++r) {
            out(r, static_cast<Index>(c)) = model.scaler.inverse_value(j, refined(r, j));
        }
    }
    return out;
}

}  // namespace autorecon
