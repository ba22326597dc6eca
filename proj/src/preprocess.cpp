#include "autorecon/preprocess.hpp"

#include "autorecon/error.hpp"

#include <algorithm>
#include <limits>
#include <set>

namespace autorecon {

Index TimeSeriesSet::index_of(const std::string& name) const {
    const auto it = std::find(feature_names.begin(), feature_names.end(), name);
    if (it == feature_names.end()) {
        throw ValidationError("unknown feature '" + name + "'");
    }
    return static_cast<Index>(it - feature_names.begin());
}

bool TimeSeriesSet::has_feature(const std::string& name) const {
    return std::find(feature_names.begin(), feature_names.end(), name) != feature_names.end();
}

void TimeSeriesSet::validate() const {
    if (!(dt > 0.0)) {
        throw ValidationError("sample interval must be positive");
    }
    if (static_cast<Index>(feature_names.size()) != values.cols()) {
        throw ValidationError("feature name count " + std::to_string(feature_names.size()) +
                              " does not match column count " + std::to_string(values.cols()));
    }
    std::set<std::string> seen(feature_names.begin(), feature_names.end());
    if (seen.size() != feature_names.size()) {
        throw ValidationError("feature names must be unique");
    }
    if (!values.allFinite()) {
        throw ValidationError("series contains non-finite values");
    }
}

double ScalerParams::transform_value(Index j, double x) const {
    if (constant[static_cast<std::size_t>(j)]) {
        return 0.5;
    }
    return (x - min(j)) / (max(j) - min(j));
}

double ScalerParams::inverse_value(Index j, double x) const {
    if (constant[static_cast<std::size_t>(j)]) {
        return min(j);
    }
    return min(j) + x * (max(j) - min(j));
}

namespace {

void check_columns(const ScalerParams& s, const Tensor& values, std::span<const Index> columns) {
    if (static_cast<Index>(columns.size()) != values.cols()) {
        throw ValidationError("scaler: column map does not match " + shape_string(values));
    }
    for (const Index j : columns) {
        if (j < 0 || j >= s.n_features()) {
            throw ValidationError("scaler: feature index out of range");
        }
    }
}

std::vector<Index> columns_by_name(const ScalerParams& s, const TimeSeriesSet& data) {
    std::vector<Index> columns;
    for (const auto& name : data.feature_names) {
        const auto it = std::find(s.feature_names.begin(), s.feature_names.end(), name);
        if (it == s.feature_names.end()) {
            throw ValidationError("scaler has no feature '" + name + "'");
        }
        columns.push_back(static_cast<Index>(it - s.feature_names.begin()));
    }
    return columns;
}

}  // namespace

Tensor ScalerParams::transform_columns(const Tensor& values, std::span<const Index> columns) const {
    check_columns(*this, values, columns);
    Tensor out(values.rows(), values.cols());
    for (Index c = 0; c < values.cols(); ++c) {
        const Index j = columns[static_cast<std::size_t>(c)];
        for (Index r = 0; r < values.rows(); ++r) {
            out(r, c) = transform_value(j, values(r, c));
        }
    }
    return out;
}

Tensor ScalerParams::inverse_columns(const Tensor& values, std::span<const Index> columns) const {
    check_columns(*this, values, columns);
    Tensor out(values.rows(), values.cols());
    for (Index c = 0; c < values.cols(); ++c) {
        const Index j = columns[static_cast<std::size_t>(c)];
        for (Index r = 0; r < values.rows(); ++r) {
            out(r, c) = inverse_value(j, values(r, c));
        }
    }
    return out;
}

ScalerParams fit_scaler(std::span<const TimeSeriesSet> data) {
    if (data.empty()) {
        throw ValidationError("fit_scaler: no datasets");
    }
    ScalerParams s;
    s.feature_names = data.front().feature_names;
    const Index n = static_cast<Index>(s.feature_names.size());
    s.min = RowVectorX<double>::Constant(n, std::numeric_limits<double>::infinity());
    s.max = RowVectorX<double>::Constant(n, -std::numeric_limits<double>::infinity());
    for (const TimeSeriesSet& set : data) {
        set.validate();
        if (set.feature_names != s.feature_names) {
            throw ValidationError("fit_scaler: datasets have inconsistent feature names");
        }
        if (set.length() == 0) {
            throw ValidationError("fit_scaler: empty dataset");
        }
        s.min = s.min.cwiseMin(set.values.colwise().minCoeff());
        s.max = s.max.cwiseMax(set.values.colwise().maxCoeff());
    }
    s.constant.resize(static_cast<std::size_t>(n));
    for (Index j = 0; j < n; ++j) {
        s.constant[static_cast<std::size_t>(j)] = !(s.max(j) > s.min(j));
    }
    return s;
}

TimeSeriesSet transform(const ScalerParams& scaler, const TimeSeriesSet& data) {
    const std::vector<Index> columns = columns_by_name(scaler, data);
    TimeSeriesSet out = data;
    out.values = scaler.transform_columns(data.values, columns);
    return out;
}

TimeSeriesSet inverse_transform(const ScalerParams& scaler, const TimeSeriesSet& data) {
    const std::vector<Index> columns = columns_by_name(scaler, data);
    TimeSeriesSet out = data;
    out.values = scaler.inverse_columns(data.values, columns);
    return out;
}

Tensor WindowBatch::step(Index t) const {
    return windows.middleCols(t * n_features, n_features);
}

Tensor WindowBatch::window(Index w) const {
    return Eigen::Map<const Tensor>(windows.row(w).data(), seq_len, n_features);
}

WindowBatch WindowBatch::from_steps(std::span<const Tensor> steps, Index source_length) {
    if (steps.empty()) {
        throw ValidationError("from_steps: no steps");
    }
    WindowBatch batch;
    batch.seq_len = static_cast<Index>(steps.size());
    batch.n_features = steps.front().cols();
    batch.source_length = source_length;
    const Index count = steps.front().rows();
    if (count != source_length - batch.seq_len + 1) {
        throw ValidationError("from_steps: " + std::to_string(count) + " windows inconsistent with length " +
                              std::to_string(source_length));
    }
    batch.windows.resize(count, batch.seq_len * batch.n_features);
    for (Index t = 0; t < batch.seq_len; ++t) {
        const Tensor& s = steps[static_cast<std::size_t>(t)];
        if (s.rows() != count || s.cols() != batch.n_features) {
            throw ValidationError("from_steps: step shapes differ");
        }
        batch.windows.middleCols(t * batch.n_features, batch.n_features) = s;
    }
    return batch;
}

WindowBatch sliding_windows(const Tensor& values, Index seq_len) {
    const Index length = values.rows();
    if (seq_len < 1) {
        throw ValidationError("sliding_windows: seq_len must be >= 1");
    }
    if (length < seq_len) {
        throw ValidationError("sliding_windows: series length " + std::to_string(length) +
                              " shorter than window " + std::to_string(seq_len));
    }
    WindowBatch batch;
    batch.seq_len = seq_len;
    batch.n_features = values.cols();
    batch.source_length = length;
    const Index count = length - seq_len + 1;
    batch.windows.resize(count, seq_len * values.cols());
    for (Index t = 0; t < seq_len; ++t) {
        batch.windows.middleCols(t * values.cols(), values.cols()) = values.middleRows(t, count);
    }
    return batch;
}

WindowBatch sliding_windows(const TimeSeriesSet& data, Index seq_len) {
    return sliding_windows(data.values, seq_len);
}

Index coverage_count(Index i, Index length, Index seq_len) {
    const Index last_window = length - seq_len;
    const Index first = std::max<Index>(0, i - seq_len + 1);
    const Index last = std::min(i, last_window);
    return last >= first ? last - first + 1 : 0;
}

namespace {

void check_batch(const WindowBatch& b) {
    if (b.seq_len < 1 || b.num_windows() != b.source_length - b.seq_len + 1 ||
        b.windows.cols() != b.seq_len * b.n_features) {
        throw ValidationError("window batch: " + std::to_string(b.num_windows()) +
                              " windows inconsistent with length " + std::to_string(b.source_length) +
                              " and seq_len " + std::to_string(b.seq_len));
    }
}

}  // namespace

Tensor overlap_mean(const WindowBatch& b) {
    check_batch(b);
    // Running mean, so windows that agree reproduce the sample bit for bit.
    Tensor mean = Tensor::Zero(b.source_length, b.n_features);
    std::vector<double> seen(static_cast<std::size_t>(b.source_length), 0.0);
    const Index count = b.num_windows();
    for (Index t = 0; t < b.seq_len; ++t) {
        for (Index w = 0; w < count; ++w) {
            const Index i = w + t;
            const double k = ++seen[static_cast<std::size_t>(i)];
            mean.row(i) += (b.windows.block(w, t * b.n_features, 1, b.n_features) - mean.row(i)) / k;
        }
    }
    return mean;
}

Tensor center_sample(const WindowBatch& b) {
    check_batch(b);
    Tensor out(b.source_length, b.n_features);
    const Index middle = b.seq_len / 2;
    const Index last_window = b.num_windows() - 1;
    for (Index i = 0; i < b.source_length; ++i) {
        const Index w = std::clamp<Index>(i - middle, 0, last_window);
        const Index t = i - w;
        out.row(i) = b.windows.block(w, t * b.n_features, 1, b.n_features);
    }
    return out;
}

}  // namespace autorecon
