#include "autorecon/nn.hpp"

#include "autorecon/error.hpp"
#include "autorecon/random.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace autorecon {

void NetConfig::validate() const {
    if (n_features < 2) {
        throw ValidationError("n_features must be >= 2");
    }
    if (seq_len < 1 || lstm_hidden < 1 || latent_dim < 1) {
        throw ValidationError("seq_len, lstm_hidden and latent_dim must be >= 1");
    }
    if (latent_dim >= lstm_hidden) {
        throw ValidationError("latent_dim must be smaller than lstm_hidden");
    }
}

bool AutoencoderParams::operator==(const AutoencoderParams& other) const {
    bool same = true;
    std::vector<const Tensor*> mine;
    for_each_parameter(*this, [&](const std::string&, const Tensor& t) { mine.push_back(&t); });
    std::size_t k = 0;
    for_each_parameter(other, [&](const std::string&, const Tensor& t) {
        const Tensor& a = *mine[k++];
        // Bitwise comparison; -0.0 and 0.0 differ, NaN never appears.
        same = same && a.rows() == t.rows() && a.cols() == t.cols() &&
               std::equal(a.data(), a.data() + a.size(), t.data(), [](double x, double y) {
                   return std::bit_cast<std::uint64_t>(x) == std::bit_cast<std::uint64_t>(y);
               });
    });
    return same;
}

namespace {

template <typename Params, typename Fn>
void visit(Params& p, Fn&& fn) {
    fn("encoder.input_weight", p.encoder.input_weight);
    fn("encoder.recurrent_weight", p.encoder.recurrent_weight);
    fn("encoder.bias", p.encoder.bias);
    fn("latent.weight", p.latent.weight);
    fn("latent.bias", p.latent.bias);
    fn("decoder.input_weight", p.decoder.input_weight);
    fn("decoder.recurrent_weight", p.decoder.recurrent_weight);
    fn("decoder.bias", p.decoder.bias);
    fn("output.weight", p.output.weight);
    fn("output.bias", p.output.bias);
}

LSTMParams zero_lstm(Index in, Index hidden) {
    return {Tensor::Zero(4 * hidden, in), Tensor::Zero(4 * hidden, hidden), Tensor::Zero(1, 4 * hidden)};
}

LinearParams zero_linear(Index in, Index out) { return {Tensor::Zero(out, in), Tensor::Zero(1, out)}; }

void fill_uniform(Tensor& t, Index fan_in, Xoshiro256& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (Index i = 0; i < t.size(); ++i) {
        t.data()[i] = rng.uniform(-bound, bound);
    }
}

void expect_shape(const std::string& name, const Tensor& t, Index rows, Index cols) {
    if (t.rows() != rows || t.cols() != cols) {
        throw ValidationError("parameter " + name + " has shape " + shape_string(t) + ", expected " +
                              shape_string(rows, cols));
    }
}

}  // namespace

void for_each_parameter(AutoencoderParams& params,
                        const std::function<void(const std::string&, Tensor&)>& fn) {
    visit(params, fn);
}

void for_each_parameter(const AutoencoderParams& params,
                        const std::function<void(const std::string&, const Tensor&)>& fn) {
    visit(params, fn);
}

Index parameter_count(const AutoencoderParams& params) {
    Index n = 0;
    for_each_parameter(params, [&](const std::string&, const Tensor& t) { n += t.size(); });
    return n;
}

Index expected_parameter_count(const NetConfig& c) {
    const Index h = c.lstm_hidden;
    const Index encoder = 4 * h * (c.n_features + h + 1);
    const Index latent = c.latent_dim * h + c.latent_dim;
    const Index decoder = 4 * h * (c.latent_dim + h + 1);
    const Index output = c.n_features * h + c.n_features;
    return encoder + latent + decoder + output;
}

AutoencoderParams zero_params(const NetConfig& c) {
    c.validate();
    return {zero_lstm(c.n_features, c.lstm_hidden), zero_linear(c.lstm_hidden, c.latent_dim),
            zero_lstm(c.latent_dim, c.lstm_hidden), zero_linear(c.lstm_hidden, c.n_features)};
}

AutoencoderParams init_params(const NetConfig& c, std::uint64_t seed) {
    AutoencoderParams p = zero_params(c);
    Xoshiro256 rng(seed);
    fill_uniform(p.encoder.input_weight, c.n_features, rng);
    fill_uniform(p.encoder.recurrent_weight, c.lstm_hidden, rng);
    fill_uniform(p.latent.weight, c.lstm_hidden, rng);
    fill_uniform(p.decoder.input_weight, c.latent_dim, rng);
    fill_uniform(p.decoder.recurrent_weight, c.lstm_hidden, rng);
    fill_uniform(p.output.weight, c.lstm_hidden, rng);
    return p;
}

void check_shapes(const AutoencoderParams& p, const NetConfig& c) {
    c.validate();
    const Index h = c.lstm_hidden;
    expect_shape("encoder.input_weight", p.encoder.input_weight, 4 * h, c.n_features);
    expect_shape("encoder.recurrent_weight", p.encoder.recurrent_weight, 4 * h, h);
    expect_shape("encoder.bias", p.encoder.bias, 1, 4 * h);
    expect_shape("latent.weight", p.latent.weight, c.latent_dim, h);
    expect_shape("latent.bias", p.latent.bias, 1, c.latent_dim);
    expect_shape("decoder.input_weight", p.decoder.input_weight, 4 * h, c.latent_dim);
    expect_shape("decoder.recurrent_weight", p.decoder.recurrent_weight, 4 * h, h);
    expect_shape("decoder.bias", p.decoder.bias, 1, 4 * h);
    expect_shape("output.weight", p.output.weight, c.n_features, h);
    expect_shape("output.bias", p.output.bias, 1, c.n_features);
}

Tensor autoencoder_forward(const AutoencoderParams& params, const Tensor& window) {
    if (window.cols() != params.output.weight.rows() || window.cols() != params.encoder.input_weight.cols()) {
        throw ValidationError("autoencoder_forward: window " + shape_string(window) +
                              " does not match the network's feature count");
    }
    Tape tape;
    const AutoencoderVars vars = bind_params<double>(tape, params, false);
    std::vector<Var> steps;
    for (Index t = 0; t < window.rows(); ++t) {
        steps.push_back(tape.constant(window.row(t)));
    }
    const std::vector<Var> out = autoencoder_forward(vars, steps);
    Tensor result(window.rows(), window.cols());
    for (Index t = 0; t < window.rows(); ++t) {
        result.row(t) = out[static_cast<std::size_t>(t)].value();
    }
    return result;
}

std::pair<Tensor, Tensor> lstm_step(const LSTMParams& p, const Tensor& x_t, const Tensor& h_prev,
                                    const Tensor& c_prev) {
    if (x_t.cols() != p.input_weight.cols() || h_prev.cols() != p.hidden() || c_prev.cols() != p.hidden() ||
        h_prev.rows() != x_t.rows() || c_prev.rows() != x_t.rows()) {
        throw ValidationError("lstm_step: shape mismatch x " + shape_string(x_t) + ", h " +
                              shape_string(h_prev) + ", c " + shape_string(c_prev));
    }
    Tape tape;
    const LSTMVars vars{tape.constant(p.input_weight.transpose()), tape.constant(p.recurrent_weight.transpose()),
                        tape.constant(p.bias), p.hidden()};
    const LSTMState next = lstm_step(vars, tape.constant(x_t), {tape.constant(h_prev), tape.constant(c_prev)});
    return {next.h.value(), next.c.value()};
}

}  // namespace autorecon
