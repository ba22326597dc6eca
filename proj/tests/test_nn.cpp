#include "autorecon/error.hpp"
#include "autorecon/nn.hpp"
#include "autorecon/training.hpp"

#include "doctest.h"
#include "support.hpp"

#include <cmath>

using namespace autorecon;
using testing::random_tensor;

TEST_CASE("init_params is deterministic per seed") {
    const NetConfig cfg;
    CHECK(init_params(cfg, 42) == init_params(cfg, 42));
    CHECK_FALSE(init_params(cfg, 42) == init_params(cfg, 43));
}

TEST_CASE("parameter count follows the layer formula") {
    const NetConfig cfg;  // n 4, h 16, latent 2
    const Index n = cfg.n_features;
    const Index h = cfg.lstm_hidden;
    const Index z = cfg.latent_dim;
    const Index expected = 4 * h * (n + h + 1) + (h * z + z) + 4 * h * (z + h + 1) + (h * n + n);
    CHECK(parameter_count(init_params(cfg, 0)) == expected);
    CHECK(expected_parameter_count(cfg) == expected);
    CHECK(expected == 1344 + 34 + 1216 + 68);
}

TEST_CASE("init_params draws weights within +-1/sqrt(fan_in) and zero biases") {
    const NetConfig cfg{4, 3, 8, 3};
    const AutoencoderParams p = init_params(cfg, 9);
    CHECK(p.encoder.input_weight.cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(4.0));
    CHECK(p.encoder.recurrent_weight.cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(8.0));
    CHECK(p.latent.weight.cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(8.0));
    CHECK(p.decoder.input_weight.cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(3.0));
    CHECK(p.output.weight.cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(8.0));
    CHECK(p.encoder.bias.isZero(0.0));
    CHECK(p.decoder.bias.isZero(0.0));
    CHECK(p.latent.bias.isZero(0.0));
    CHECK(p.output.bias.isZero(0.0));
    CHECK(p.encoder.input_weight.rows() == 32);
    CHECK(p.decoder.recurrent_weight.cols() == 8);
}

TEST_CASE("config validation") {
    CHECK_NOTHROW(NetConfig{}.validate());
    CHECK_THROWS_AS((NetConfig{1, 3, 16, 2}.validate()), ValidationError);
    CHECK_THROWS_AS((NetConfig{4, 0, 16, 2}.validate()), ValidationError);
    CHECK_THROWS_AS((NetConfig{4, 3, 4, 4}.validate()), ValidationError);
    CHECK_THROWS_AS((NetConfig{4, 3, 16, 0}.validate()), ValidationError);
}

TEST_CASE("lstm_step with zero parameters") {
    const NetConfig cfg{4, 3, 5, 2};
    const AutoencoderParams zero = zero_params(cfg);
    Xoshiro256 rng(1);
    const Tensor x = random_tensor(rng, 2, 4);
    {
        const auto [h, c] = lstm_step(zero.encoder, x, Tensor::Zero(2, 5), Tensor::Zero(2, 5));
        CHECK(h.isZero(0.0));
        CHECK(c.isZero(0.0));
    }
    {
        const auto [h, c] = lstm_step(zero.encoder, x, Tensor::Zero(2, 5), Tensor::Ones(2, 5));
        CHECK((c.array() == 0.5).all());
        CHECK(h(0, 0) == doctest::Approx(0.5 * std::tanh(0.5)).epsilon(1e-15));
        CHECK(h(1, 4) == doctest::Approx(0.231).epsilon(1e-3));
    }
}

TEST_CASE("lstm_step gate order is input, forget, candidate, output") {
    // one hidden unit, input weight 0, so gates are sigmoid/tanh of the biases
    LSTMParams p;
    p.input_weight = Tensor::Zero(4, 1);
    p.recurrent_weight = Tensor::Zero(4, 1);
    p.bias = testing::mat({{0.3, -0.2, 0.7, 1.1}});
    const auto [h, c] = lstm_step(p, Tensor::Zero(1, 1), Tensor::Zero(1, 1), testing::mat({{2.0}}));
    auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
    const double c_ref = sig(-0.2) * 2.0 + sig(0.3) * std::tanh(0.7);
    CHECK(c(0, 0) == doctest::Approx(c_ref).epsilon(1e-14));
    CHECK(h(0, 0) == doctest::Approx(sig(1.1) * std::tanh(c_ref)).epsilon(1e-14));
}

TEST_CASE("lstm_step gradient matches finite differences") {
    Xoshiro256 rng(4);
    const NetConfig cfg{3, 3, 4, 2};
    AutoencoderParams params = init_params(cfg, 6);
    const std::vector<Tensor> xs{params.encoder.input_weight, params.encoder.recurrent_weight,
                                 random_tensor(rng, 1, 16, -0.5, 0.5), random_tensor(rng, 3, 3),
                                 random_tensor(rng, 3, 4, -0.5, 0.5), random_tensor(rng, 3, 4, -0.5, 0.5)};
    const double err = grad_check(
        []<typename S>(BasicTape<S>&, std::span<const BasicVar<S>> v) {
            const BasicLSTMVars<S> p{transpose(v[0]), transpose(v[1]), v[2], 4};
            return sum(lstm_step(p, v[3], BasicLSTMState<S>{v[4], v[5]}).h);
        },
        xs);
    CHECK(err < 1e-5);
}

TEST_CASE("autoencoder output shape equals input shape") {
    const NetConfig cfg;
    const AutoencoderParams p = init_params(cfg, 1);
    Xoshiro256 rng(2);
    const Tensor window = random_tensor(rng, 3, 4, 0.0, 1.0);
    const Tensor out = autoencoder_forward(p, window);
    CHECK(out.rows() == 3);
    CHECK(out.cols() == 4);
    CHECK_THROWS_AS(autoencoder_forward(p, random_tensor(rng, 3, 5)), ValidationError);
}

TEST_CASE("zero network outputs zeros") {
    const NetConfig cfg;
    Xoshiro256 rng(3);
    for (int k = 0; k < 5; ++k) {
        CHECK(autoencoder_forward(zero_params(cfg), random_tensor(rng, 3, 4, -5.0, 5.0)).isZero(0.0));
    }
}

TEST_CASE("autoencoder forward is pure") {
    const AutoencoderParams p = init_params(NetConfig{}, 8);
    Xoshiro256 rng(4);
    const Tensor window = random_tensor(rng, 3, 4);
    CHECK(testing::bitwise_equal(autoencoder_forward(p, window), autoencoder_forward(p, window)));
}

TEST_CASE("latent activations stay inside (-1, 1)") {
    const NetConfig cfg{4, 3, 6, 2};
    AutoencoderParams p = init_params(cfg, 5);
    // large weights push the latent pre-activations far out
    p.latent.weight *= 50.0;
    Xoshiro256 rng(6);
    Tape tape;
    const AutoencoderVars vars = bind_params(tape, p, false);
    std::vector<Var> steps;
    for (int t = 0; t < 3; ++t) {
        steps.push_back(tape.constant(random_tensor(rng, 20, 4, -3.0, 3.0)));
    }
    std::vector<Var> latent;
    (void)autoencoder_forward(vars, steps, &latent);
    REQUIRE(latent.size() == 3);
    for (const Var& z : latent) {
        CHECK(z.cols() == 2);
        CHECK(z.value().cwiseAbs().maxCoeff() <= 1.0);
    }
}

TEST_CASE("autoencoder gradient wrt parameters and window matches finite differences") {
    Xoshiro256 rng(12);
    const NetConfig cfg{4, 3, 5, 2};
    AutoencoderParams params = init_params(cfg, 13);
    for_each_parameter(params, [&](const std::string&, Tensor& t) {
        if (t.rows() == 1) {
            t = random_tensor(rng, 1, t.cols(), -0.5, 0.5);
        }
    });
    std::vector<Tensor> xs = flatten(params);
    xs.push_back(random_tensor(rng, 3, 4, 0.0, 1.0));
    const Tensor w = random_tensor(rng, 3, 4);
    const double err = grad_check(
        [&]<typename S>(BasicTape<S>& tape, std::span<const BasicVar<S>> v) {
            const auto vars = autoencoder_vars<S>(v.first(10));
            std::vector<BasicVar<S>> steps;
            for (Index t = 0; t < 3; ++t) {
                steps.push_back(slice_rows(v[10], t, 1));
            }
            const auto out = concat_rows<S>(autoencoder_forward<S>(vars, steps));
            return sum(hadamard(out, tape.constant(w.cast<S>())));
        },
        xs, 1e-5);
    CHECK(err < 1e-5);
}

TEST_CASE("training on a constant series reconstructs it") {
    TimeSeriesSet data;
    data.feature_names = {"a", "b", "c", "d"};
    data.dt = 1.0;
    data.values = Tensor(40, 4);
    data.values.col(0).setConstant(1.0);
    data.values.col(1).setConstant(-2.0);
    data.values.col(2).setConstant(0.5);
    data.values.col(3).setConstant(3.0);
    TrainConfig cfg;
    cfg.epochs = 200;
    cfg.learning_rate = 0.01;
    cfg.net = NetConfig{4, 3, 8, 2};
    const TrainResult result = train(std::span(&data, 1), cfg);
    const Evaluation ev = evaluate_model(result.model, data);
    for (double m : ev.mse_data) {
        CHECK(m < 1e-3);
    }
}

TEST_CASE("parameter names and order") {
    std::vector<std::string> names;
    for_each_parameter(static_cast<const AutoencoderParams&>(init_params(NetConfig{}, 0)),
                       [&](const std::string& name, const Tensor&) { names.push_back(name); });
    CHECK(names == std::vector<std::string>{"encoder.input_weight", "encoder.recurrent_weight", "encoder.bias",
                                            "latent.weight", "latent.bias", "decoder.input_weight",
                                            "decoder.recurrent_weight", "decoder.bias", "output.weight",
                                            "output.bias"});
}

TEST_CASE("check_shapes rejects mismatched tensors") {
    const NetConfig cfg;
    AutoencoderParams p = init_params(cfg, 0);
    CHECK_NOTHROW(check_shapes(p, cfg));
    p.decoder.bias = Tensor::Zero(1, 3);
    CHECK_THROWS_AS(check_shapes(p, cfg), ValidationError);
}
