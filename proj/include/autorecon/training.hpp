#pragma once

#include "autorecon/nn.hpp"
#include "autorecon/preprocess.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace autorecon {

struct TrainConfig {
    int epochs = 1000;
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;
    NetConfig net;
};

struct TrainingMetadata {
    std::uint64_t seed = 0;
    int epochs = 0;
    double learning_rate = 0.0;
    /// Loss of each training dataset at its last update, in dataset order.
    std::vector<double> final_losses;
};

/// Frozen artifact consumed by reconstruction. The scaler's feature order is
/// the network's column order.
struct TrainedModel {
    NetConfig config;
    ScalerParams scaler;
    AutoencoderParams params;
    TrainingMetadata metadata;

    const std::vector<std::string>& feature_names() const { return scaler.feature_names; }
};

struct LossRecord {
    int epoch = 0;
    int dataset = 0;
    double loss = 0.0;
};

struct TrainResult {
    TrainedModel model;
    /// One record per parameter update, in update order.
    std::vector<LossRecord> history;
};

using TrainProgress = std::function<void(const LossRecord&)>;

/// Dataset visiting order for an epoch: a rotation of 0..n-1 starting at
/// epoch mod n, so every dataset takes every position equally often.
std::vector<int> dataset_order(int epoch, int num_datasets);

/// Trains the autoencoder. The scaler is fitted once over all datasets. Each
/// epoch visits the datasets in dataset_order(); for each one the MSE over
/// all of its windows is differentiated and Adam applies exactly one update.
/// The recorded loss is the value before that update. Throws NumericalError
/// naming the epoch if the loss becomes non-finite.
TrainResult train(std::span<const TimeSeriesSet> datasets, const TrainConfig& config,
                  const TrainProgress& progress = {});

/// Network output for every window of a scaled batch.
WindowBatch forward_batch(const AutoencoderParams& params, const WindowBatch& batch);

struct Evaluation {
    /// Overlap-mean reconstruction in data units, model feature order.
    TimeSeriesSet reconstruction;
    std::vector<double> mse_scaled;
    std::vector<double> mse_data;
};

/// Reorders `data` into the model's feature order; throws unless it carries
/// exactly the model's features.
TimeSeriesSet align_features(const TrainedModel& model, const TimeSeriesSet& data);

Evaluation evaluate_model(const TrainedModel& model, const TimeSeriesSet& data);

/// Parameter tensors in for_each_parameter order, and the inverse.
std::vector<Tensor> flatten(const AutoencoderParams& params);
void unflatten(std::span<const Tensor> tensors, AutoencoderParams& params);

}  // namespace autorecon
