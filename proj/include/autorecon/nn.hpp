#pragma once

// Hourglass sequence autoencoder: LSTM encoder, tanh-linear latent layer,
// LSTM decoder and a linear output layer, all recorded on an autodiff tape.
//
// A batch of W windows is processed at once: the input for time step t is a
// [W x n_features] matrix, and every layer maps such per-step matrices.

#include "autorecon/autodiff.hpp"
#include "autorecon/error.hpp"
#include "autorecon/tensor.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace autorecon {

struct NetConfig {
    Index n_features = 4;
    Index seq_len = 3;
    Index lstm_hidden = 16;
    Index latent_dim = 2;

    /// Throws ValidationError unless every size is >= 1, n_features >= 2 and
    /// latent_dim < lstm_hidden.
    void validate() const;

    bool operator==(const NetConfig&) const = default;
};

struct LinearParams {
    Tensor weight;  // [out x in]
    Tensor bias;    // [1 x out]
};

/// Gate blocks are stacked in the fixed order input, forget, candidate,
/// output; each block spans `hidden` rows of the weights.
struct LSTMParams {
    Tensor input_weight;      // [4h x in]
    Tensor recurrent_weight;  // [4h x h]
    Tensor bias;              // [1 x 4h]

    Index hidden() const { return recurrent_weight.cols(); }
};

struct AutoencoderParams {
    LSTMParams encoder;
    LinearParams latent;
    LSTMParams decoder;
    LinearParams output;

    bool operator==(const AutoencoderParams& other) const;
};

/// Visits every parameter tensor in a fixed order with a stable name, e.g.
/// "encoder.input_weight". Serialization and the optimizer rely on the order.
void for_each_parameter(AutoencoderParams& params,
                        const std::function<void(const std::string&, Tensor&)>& fn);
void for_each_parameter(const AutoencoderParams& params,
                        const std::function<void(const std::string&, const Tensor&)>& fn);

Index parameter_count(const AutoencoderParams& params);

/// Closed-form count for a configuration: 4h(in + h + 1) per LSTM plus the
/// two linear layers.
Index expected_parameter_count(const NetConfig& config);

/// Shapes for `config` with all entries zero.
AutoencoderParams zero_params(const NetConfig& config);

/// Weights uniform in (-1/sqrt(fan_in), 1/sqrt(fan_in)) drawn from
/// xoshiro256** seeded with `seed`; biases zero.
AutoencoderParams init_params(const NetConfig& config, std::uint64_t seed);

/// Checks that the tensor shapes agree with `config`.
void check_shapes(const AutoencoderParams& params, const NetConfig& config);

// --- tape-level building blocks ---------------------------------------------
// Templated on the tape scalar so finite-difference probes can run in
// extended precision; the library itself uses double.

template <typename Scalar>
struct BasicLSTMVars {
    BasicVar<Scalar> input_weight_t;      // [in x 4h], transposed once per binding
    BasicVar<Scalar> recurrent_weight_t;  // [h x 4h]
    BasicVar<Scalar> bias;                // [1 x 4h]
    Index hidden = 0;
};

template <typename Scalar>
struct BasicLinearVars {
    BasicVar<Scalar> weight_t;  // [in x out]
    BasicVar<Scalar> bias;      // [1 x out]
};

/// Parameters placed on a tape. `leaves` lists the parameter leaves in
/// for_each_parameter order so gradients can be collected.
template <typename Scalar>
struct BasicAutoencoderVars {
    BasicLSTMVars<Scalar> encoder;
    BasicLinearVars<Scalar> latent;
    BasicLSTMVars<Scalar> decoder;
    BasicLinearVars<Scalar> output;
    std::vector<BasicVar<Scalar>> leaves;
};

template <typename Scalar>
struct BasicLSTMState {
    BasicVar<Scalar> h;
    BasicVar<Scalar> c;
};

using LSTMVars = BasicLSTMVars<double>;
using LinearVars = BasicLinearVars<double>;
using AutoencoderVars = BasicAutoencoderVars<double>;
using LSTMState = BasicLSTMState<double>;

/// Wraps parameter leaves laid out in for_each_parameter order (ten tensors).
template <typename Scalar>
BasicAutoencoderVars<Scalar> autoencoder_vars(std::span<const BasicVar<Scalar>> leaves) {
    if (leaves.size() != 10) {
        throw ValidationError("autoencoder_vars: expected 10 parameter leaves, got " +
                              std::to_string(leaves.size()));
    }
    BasicAutoencoderVars<Scalar> vars;
    const Index enc_hidden = leaves[1].cols();
    const Index dec_hidden = leaves[6].cols();
    vars.encoder = {transpose(leaves[0]), transpose(leaves[1]), leaves[2], enc_hidden};
    vars.latent = {transpose(leaves[3]), leaves[4]};
    vars.decoder = {transpose(leaves[5]), transpose(leaves[6]), leaves[7], dec_hidden};
    vars.output = {transpose(leaves[8]), leaves[9]};
    vars.leaves.assign(leaves.begin(), leaves.end());
    return vars;
}

template <typename Scalar>
BasicAutoencoderVars<Scalar> bind_params(BasicTape<Scalar>& tape, const AutoencoderParams& params,
                                         bool requires_grad) {
    std::vector<BasicVar<Scalar>> leaves;
    for_each_parameter(params, [&](const std::string&, const Tensor& t) {
        leaves.push_back(tape.leaf(t.template cast<Scalar>(), requires_grad));
    });
    return autoencoder_vars<Scalar>(leaves);
}

/// One LSTM cell step for a batch: x_t [W x in], state [W x h] each.
///   i = sigmoid(.), f = sigmoid(.), g = tanh(.), o = sigmoid(.)
///   c = f*c_prev + i*g, h = o*tanh(c)
template <typename Scalar>
BasicLSTMState<Scalar> lstm_step(const BasicLSTMVars<Scalar>& p, const BasicVar<Scalar>& x_t,
                                 const BasicLSTMState<Scalar>& prev) {
    const Index h = p.hidden;
    const auto gates = matmul(x_t, p.input_weight_t) + matmul(prev.h, p.recurrent_weight_t) + p.bias;
    const auto i = sigmoid(slice_cols(gates, 0, h));
    const auto f = sigmoid(slice_cols(gates, h, h));
    const auto g = tanh(slice_cols(gates, 2 * h, h));
    const auto o = sigmoid(slice_cols(gates, 3 * h, h));
    const auto c = hadamard(f, prev.c) + hadamard(i, g);
    return {hadamard(o, tanh(c)), c};
}

/// Per-step outputs of the autoencoder for per-step inputs. `steps` holds
/// seq_len matrices of shape [W x n]; both LSTMs start from zero state. The
/// latent layer is applied per step. When `latent_trace` is non-null the tanh
/// latent activations of every step are appended to it.
template <typename Scalar>
std::vector<BasicVar<Scalar>> autoencoder_forward(const BasicAutoencoderVars<Scalar>& vars,
                                                  std::span<const BasicVar<Scalar>> steps,
                                                  std::vector<BasicVar<Scalar>>* latent_trace = nullptr) {
    using Matrix = MatrixX<Scalar>;
    if (steps.empty()) {
        throw ValidationError("autoencoder_forward: no time steps");
    }
    auto& tape = *steps.front().tape();
    const Index batch = steps.front().rows();
    auto linear = [](const BasicLinearVars<Scalar>& p, const BasicVar<Scalar>& x) {
        return matmul(x, p.weight_t) + p.bias;
    };

    BasicLSTMState<Scalar> enc{tape.constant(Matrix::Zero(batch, vars.encoder.hidden)),
                               tape.constant(Matrix::Zero(batch, vars.encoder.hidden))};
    BasicLSTMState<Scalar> dec{tape.constant(Matrix::Zero(batch, vars.decoder.hidden)),
                               tape.constant(Matrix::Zero(batch, vars.decoder.hidden))};

    std::vector<BasicVar<Scalar>> encoded;
    encoded.reserve(steps.size());
    for (const auto& x_t : steps) {
        enc = lstm_step(vars.encoder, x_t, enc);
        encoded.push_back(enc.h);
    }

    std::vector<BasicVar<Scalar>> outputs;
    outputs.reserve(steps.size());
    for (const auto& h_t : encoded) {
        const auto z = tanh(linear(vars.latent, h_t));
        if (latent_trace != nullptr) {
            latent_trace->push_back(z);
        }
        dec = lstm_step(vars.decoder, z, dec);
        outputs.push_back(linear(vars.output, dec.h));
    }
    return outputs;
}

inline std::vector<Var> autoencoder_forward(const AutoencoderVars& vars, const std::vector<Var>& steps,
                                            std::vector<Var>* latent_trace = nullptr) {
    return autoencoder_forward<double>(vars, std::span<const Var>(steps), latent_trace);
}

// --- value-level convenience -------------------------------------------------

/// Reconstruction of a single window [seq_len x n] -> [seq_len x n].
Tensor autoencoder_forward(const AutoencoderParams& params, const Tensor& window);

/// LSTM step on plain values; x_t [W x in], h/c [W x h].
std::pair<Tensor, Tensor> lstm_step(const LSTMParams& p, const Tensor& x_t, const Tensor& h_prev,
                                    const Tensor& c_prev);

}  // namespace autorecon
