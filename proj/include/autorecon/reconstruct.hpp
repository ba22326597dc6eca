#pragma once

// Missing-variable reconstruction against a frozen autoencoder.
//
// The missing features become optimization variables at the network input
// (one value per time sample, shared by every window that covers it). The
// loss only compares the available features of the output with their known
// values, and Adam updates the missing series while the parameters stay
// untouched.

#include "autorecon/optim.hpp"
#include "autorecon/preprocess.hpp"
#include "autorecon/training.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace autorecon {

enum class InitMode {
    Zeros,     // 0 in scaled units, i.e. the training minimum
    Midpoint,  // 0.5 in scaled units
};

struct ReconstructionSpec {
    std::vector<std::string> missing;
    /// Defaults to 300 for one missing feature and 3000 for more.
    std::optional<int> epochs;
    double learning_rate = 0.005;
    InitMode init = InitMode::Zeros;
    /// Per available feature loss weight; unlisted features weigh 1.
    std::map<std::string, double> weights;

    int resolved_epochs() const;
};

int default_reconstruction_epochs(std::size_t missing_count);

struct ReconstructionResult {
    std::vector<std::string> missing;
    double t0 = 0.0;
    double dt = 1.0;
    /// Optimized input series, data units, [T x k] in `missing` order.
    Tensor x_miss;
    /// Network output for the missing columns after one more forward pass of
    /// the completed series; the recommended estimate.
    Tensor x_hat_miss;
    /// Reduced loss before each update, one entry per epoch.
    std::vector<double> loss_history;
    double initial_loss = 0.0;
    /// Reduced loss at the returned x_miss.
    double final_loss = 0.0;
};

/// The reduced loss as a function of the missing series, for one model and
/// one application dataset. Holds scaled copies of the known data.
class ReducedLossProblem {
public:
    ReducedLossProblem(const TrainedModel& model, const TimeSeriesSet& data, std::vector<std::string> missing,
                       const std::map<std::string, double>& weights = {});

    Index length() const { return known_.rows(); }
    const std::vector<std::string>& missing() const { return missing_; }
    const std::vector<Index>& missing_columns() const { return missing_columns_; }
    const std::vector<Index>& available_columns() const { return available_columns_; }
    const TimeSeriesSet& scaled_known() const { return scaled_; }

    /// Starting point: one [T x 1] scaled column per missing feature.
    std::vector<Tensor> initial_guess(InitMode mode) const;

    /// Records the reduced loss for scaled missing columns `x_miss` ([T x 1]
    /// each, in missing() order) on `tape`. Network weights enter as
    /// constants, so backward() yields gradients for x_miss only.
    template <typename Scalar>
    BasicVar<Scalar> loss(BasicTape<Scalar>& tape, std::span<const BasicVar<Scalar>> x_miss) const;

    double loss_value(std::span<const Tensor> x_miss) const;

    /// Full scaled [T x n] series with the missing columns filled in.
    Tensor assemble(std::span<const Tensor> x_miss) const;

private:
    const TrainedModel* model_;
    std::vector<std::string> missing_;
    std::vector<Index> missing_columns_;
    std::vector<Index> available_columns_;
    std::vector<double> weights_;
    TimeSeriesSet scaled_;  // model order, missing columns zeroed
    Tensor known_;
    Tensor target_;         // stacked window steps, available columns only
};

template <typename Scalar>
BasicVar<Scalar> ReducedLossProblem::loss(BasicTape<Scalar>& tape, std::span<const BasicVar<Scalar>> x_miss) const {
    if (x_miss.size() != missing_.size()) {
        throw ValidationError("expected " + std::to_string(missing_.size()) + " missing series, got " +
                              std::to_string(x_miss.size()));
    }
    for (const BasicVar<Scalar>& x : x_miss) {
        if (x.rows() != length() || x.cols() != 1) {
            throw ValidationError("missing series has shape " + shape_string(x.rows(), x.cols()) + ", expected " +
                                  shape_string(length(), 1));
        }
    }
    const BasicVar<Scalar> known = tape.constant(known_.cast<Scalar>());
    std::vector<BasicVar<Scalar>> columns;
    for (Index j = 0; j < known_.cols(); ++j) {
        const auto it = std::find(missing_columns_.begin(), missing_columns_.end(), j);
        if (it != missing_columns_.end()) {
            columns.push_back(x_miss[static_cast<std::size_t>(it - missing_columns_.begin())]);
        } else {
            columns.push_back(slice_cols(known, j, 1));
        }
    }
    const BasicVar<Scalar> series = concat_cols(columns);
    const auto steps = window_steps(series, model_->config.seq_len);
    const auto vars = bind_params<Scalar>(tape, model_->params, false);
    const BasicVar<Scalar> output = concat_rows<Scalar>(autoencoder_forward<Scalar>(vars, steps));
    return reduced_loss(tape.constant(target_.cast<Scalar>()), select_columns(output, std::span(available_columns_)),
                        std::span<const double>(weights_));
}

/// Runs the optimization described above for spec.resolved_epochs() epochs,
/// one Adam step per epoch on the gradient over all windows. `data` must
/// carry every available feature; missing columns, if present, are ignored.
ReconstructionResult reconstruct(const TrainedModel& model, const TimeSeriesSet& data,
                                 const ReconstructionSpec& spec);

/// One forward pass over a complete series (data units, any column order);
/// returns the overlap-mean output columns of `features` in data units.
Tensor refine(const TrainedModel& model, const TimeSeriesSet& full, std::span<const std::string> features);

}  // namespace autorecon
