#include "autorecon/training.hpp"

#include "autorecon/error.hpp"
#include "autorecon/optim.hpp"

#include <cmath>

namespace autorecon {

std::vector<int> dataset_order(int epoch, int num_datasets) {
    std::vector<int> order;
    order.reserve(static_cast<std::size_t>(num_datasets));
    for (int k = 0; k < num_datasets; ++k) {
        order.push_back((epoch + k) % num_datasets);
    }
    return order;
}

std::vector<Tensor> flatten(const AutoencoderParams& params) {
    std::vector<Tensor> out;
    for_each_parameter(params, [&](const std::string&, const Tensor& t) { out.push_back(t); });
    return out;
}

void unflatten(std::span<const Tensor> tensors, AutoencoderParams& params) {
    std::size_t k = 0;
    for_each_parameter(params, [&](const std::string& name, Tensor& t) {
        if (k >= tensors.size() || tensors[k].rows() != t.rows() || tensors[k].cols() != t.cols()) {
            throw ValidationError("unflatten: tensor for " + name + " missing or misshaped");
        }
        t = tensors[k++];
    });
}

namespace {

/// Stacks the per-step matrices of a batch: [seq_len*W x n], step-major.
Tensor stacked_steps(const WindowBatch& batch) {
    const Index count = batch.num_windows();
    Tensor out(batch.seq_len * count, batch.n_features);
    for (Index t = 0; t < batch.seq_len; ++t) {
        out.middleRows(t * count, count) = batch.step(t);
    }
    return out;
}

struct PreparedSet {
    WindowBatch batch;
    Tensor target;
};

}  // namespace

TrainResult train(std::span<const TimeSeriesSet> datasets, const TrainConfig& config,
                  const TrainProgress& progress) {
    if (datasets.empty()) {
        throw ValidationError("train: no datasets");
    }
    if (config.epochs < 0) {
        throw ValidationError("train: epochs must be >= 0");
    }
    if (!(config.learning_rate > 0.0)) {
        throw ValidationError("train: learning rate must be positive");
    }
    NetConfig net = config.net;
    net.n_features = datasets.front().n_features();
    net.validate();

    TrainResult result;
    TrainedModel& model = result.model;
    model.config = net;
    model.scaler = fit_scaler(datasets);
    model.params = init_params(net, config.seed);
    model.metadata.seed = config.seed;
    model.metadata.epochs = config.epochs;
    model.metadata.learning_rate = config.learning_rate;
    model.metadata.final_losses.assign(datasets.size(), 0.0);

    std::vector<PreparedSet> prepared;
    for (const TimeSeriesSet& set : datasets) {
        const TimeSeriesSet scaled = transform(model.scaler, set);
        WindowBatch batch = sliding_windows(scaled, net.seq_len);
        Tensor target = stacked_steps(batch);
        prepared.push_back({std::move(batch), std::move(target)});
    }

    std::vector<Tensor> weights = flatten(model.params);
    AdamState adam = make_adam_state(weights, config.learning_rate);
    const int count = static_cast<int>(datasets.size());
    result.history.reserve(static_cast<std::size_t>(config.epochs * count));

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        for (const int d : dataset_order(epoch, count)) {
            const PreparedSet& set = prepared[static_cast<std::size_t>(d)];
            Tape tape;
            double loss_value = 0.0;
            std::vector<Tensor> grads;
            try {
                const AutoencoderVars vars = bind_params(tape, model.params, true);
                std::vector<Var> steps;
                for (Index t = 0; t < net.seq_len; ++t) {
                    steps.push_back(tape.constant(set.batch.step(t)));
                }
                const std::vector<Var> outputs = autoencoder_forward(vars, steps);
                const Var loss = mse(concat_rows(outputs), tape.constant(set.target));
                loss_value = loss.value()(0, 0);
                const Gradients g = tape.backward(loss);
                for (const Var& leaf : vars.leaves) {
                    grads.push_back(g[leaf]);
                }
            } catch (const NumericalError& e) {
                throw NumericalError("training diverged at epoch " + std::to_string(epoch) + ", dataset " +
                                     std::to_string(d) + ": " + e.what());
            }
            if (!std::isfinite(loss_value)) {
                throw NumericalError("training diverged at epoch " + std::to_string(epoch));
            }
            adam_step(adam, weights, grads);
            unflatten(weights, model.params);

            const LossRecord record{epoch, d, loss_value};
            model.metadata.final_losses[static_cast<std::size_t>(d)] = loss_value;
            result.history.push_back(record);
            if (progress) {
                progress(record);
            }
        }
    }
    return result;
}

WindowBatch forward_batch(const AutoencoderParams& params, const WindowBatch& batch) {
    Tape tape;
    const AutoencoderVars vars = bind_params(tape, params, false);
    std::vector<Var> steps;
    for (Index t = 0; t < batch.seq_len; ++t) {
        steps.push_back(tape.constant(batch.step(t)));
    }
    const std::vector<Var> outputs = autoencoder_forward(vars, steps);
    std::vector<Tensor> values;
    for (const Var& v : outputs) {
        values.push_back(v.value());
    }
    return WindowBatch::from_steps(values, batch.source_length);
}

TimeSeriesSet align_features(const TrainedModel& model, const TimeSeriesSet& data) {
    data.validate();
    const auto& names = model.feature_names();
    if (data.feature_names.size() != names.size()) {
        throw ValidationError("dataset has " + std::to_string(data.feature_names.size()) +
                              " features, model expects " + std::to_string(names.size()));
    }
    TimeSeriesSet out = data;
    out.feature_names = names;
    for (std::size_t j = 0; j < names.size(); ++j) {
        out.values.col(static_cast<Index>(j)) = data.values.col(data.index_of(names[j]));
    }
    return out;
}

Evaluation evaluate_model(const TrainedModel& model, const TimeSeriesSet& data) {
    const TimeSeriesSet aligned = align_features(model, data);
    const TimeSeriesSet scaled = transform(model.scaler, aligned);
    const WindowBatch outputs = forward_batch(model.params, sliding_windows(scaled, model.config.seq_len));

    TimeSeriesSet recon_scaled = scaled;
    recon_scaled.values = overlap_mean(outputs);

    Evaluation ev;
    ev.reconstruction = inverse_transform(model.scaler, recon_scaled);
    for (Index j = 0; j < scaled.n_features(); ++j) {
        ev.mse_scaled.push_back((recon_scaled.values.col(j) - scaled.values.col(j)).squaredNorm() /
                                static_cast<double>(scaled.length()));
        ev.mse_data.push_back((ev.reconstruction.values.col(j) - aligned.values.col(j)).squaredNorm() /
                              static_cast<double>(aligned.length()));
    }
    return ev;
}

}  // namespace autorecon
