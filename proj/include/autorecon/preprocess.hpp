#pragma once

#include "autorecon/autodiff.hpp"
#include "autorecon/error.hpp"
#include "autorecon/tensor.hpp"

#include <span>
#include <string>
#include <vector>

namespace autorecon {

/// Equidistant multivariate series: values [T x n], one named column per
/// feature, sample k taken at t0 + k*dt.
struct TimeSeriesSet {
    std::vector<std::string> feature_names;
    double t0 = 0.0;
    double dt = 1.0;
    Tensor values;

    Index length() const { return values.rows(); }
    Index n_features() const { return values.cols(); }

    /// Column index of `name`; throws ValidationError when absent.
    Index index_of(const std::string& name) const;
    bool has_feature(const std::string& name) const;

    /// Throws unless dt > 0, names are unique and match the column count.
    void validate() const;
};

/// Per-feature min/max fitted on training data. A feature that was constant
/// during fitting is flagged; it transforms to 0.5 and inverts to the constant.
struct ScalerParams {
    std::vector<std::string> feature_names;
    RowVectorX<double> min;
    RowVectorX<double> max;
    std::vector<bool> constant;

    Index n_features() const { return min.size(); }

    /// Maps column `feature` of `values` (data units) to scaled units.
    double transform_value(Index feature, double x) const;
    double inverse_value(Index feature, double x) const;

    /// Applies the affine map column-wise; `columns[j]` names the scaler
    /// feature index of column j.
    Tensor transform_columns(const Tensor& values, std::span<const Index> columns) const;
    Tensor inverse_columns(const Tensor& values, std::span<const Index> columns) const;
};

/// Global per-feature extrema across all sets. Throws on an empty list or
/// inconsistent feature names.
ScalerParams fit_scaler(std::span<const TimeSeriesSet> data);

/// x' = (x - min) / (max - min). Values outside the fitted range map outside
/// [0, 1]; nothing is clipped. Columns are matched by name.
TimeSeriesSet transform(const ScalerParams& scaler, const TimeSeriesSet& data);
TimeSeriesSet inverse_transform(const ScalerParams& scaler, const TimeSeriesSet& data);

/// Stride-1 windows of a [T x n] series. Row w holds window w flattened
/// step-major: columns [t*n, (t+1)*n) are time step t, i.e. sample w + t.
struct WindowBatch {
    Tensor windows;  // [num_windows x seq_len*n]
    Index source_length = 0;
    Index seq_len = 0;
    Index n_features = 0;

    Index num_windows() const { return windows.rows(); }

    /// All windows' time step t as [num_windows x n].
    Tensor step(Index t) const;
    /// Window w as [seq_len x n].
    Tensor window(Index w) const;

    /// Inverse of step(): builds a batch from seq_len per-step matrices.
    static WindowBatch from_steps(std::span<const Tensor> steps, Index source_length);
};

WindowBatch sliding_windows(const Tensor& values, Index seq_len);
WindowBatch sliding_windows(const TimeSeriesSet& data, Index seq_len);

/// Differentiable stride-1 window extraction of a [T x n] series on a tape:
/// element t is slice_rows(series, t, T - seq_len + 1), the step-t inputs of
/// every window. Gradients from overlapping windows add up in the series.
template <typename Scalar>
std::vector<BasicVar<Scalar>> window_steps(const BasicVar<Scalar>& series, Index seq_len) {
    const Index length = series.rows();
    if (seq_len < 1 || length < seq_len) {
        throw ValidationError("window_steps: series length " + std::to_string(length) + " shorter than window " +
                              std::to_string(seq_len));
    }
    const Index count = length - seq_len + 1;
    std::vector<BasicVar<Scalar>> steps;
    steps.reserve(static_cast<std::size_t>(seq_len));
    for (Index t = 0; t < seq_len; ++t) {
        steps.push_back(slice_rows(series, t, count));
    }
    return steps;
}

/// [T x n] series whose sample i is the mean of every window cell covering i.
Tensor overlap_mean(const WindowBatch& batch);

/// Alternative merge: sample i is taken from the window in which it sits at
/// the middle step; the first and last samples come from the edge windows.
Tensor center_sample(const WindowBatch& batch);

/// Number of stride-1 windows of length seq_len over T samples covering i.
Index coverage_count(Index i, Index length, Index seq_len);

}  // namespace autorecon
