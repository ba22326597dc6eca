#include "autorecon/gradcheck.hpp"

#include "autorecon/autodiff.hpp"
#include "autorecon/nn.hpp"
#include "autorecon/random.hpp"
#include "autorecon/reconstruct.hpp"

#include <algorithm>
#include <chrono>

namespace autorecon {

bool GradcheckSummary::passed() const {
    return std::all_of(entries.begin(), entries.end(), [](const GradcheckEntry& e) { return e.passed; });
}

double GradcheckSummary::worst() const {
    double w = 0.0;
    for (const auto& e : entries) {
        w = std::max(w, e.max_relative_error);
    }
    return w;
}

namespace {

Tensor random_tensor(Xoshiro256& rng, Index rows, Index cols, double lo = -1.0, double hi = 1.0) {
    Tensor t(rows, cols);
    for (Index i = 0; i < t.size(); ++i) {
        t.data()[i] = rng.uniform(lo, hi);
    }
    return t;
}

struct OpCase {
    const char* name;
    std::vector<std::pair<Index, Index>> shapes;
    Index out_rows;
    Index out_cols;
};

const std::vector<OpCase>& op_cases() {
    static const std::vector<OpCase> cases{
        {"add", {{3, 4}, {3, 4}}, 3, 4},
        {"add (row broadcast)", {{3, 4}, {1, 4}}, 3, 4},
        {"subtract", {{3, 4}, {3, 4}}, 3, 4},
        {"multiply", {{3, 4}, {3, 4}}, 3, 4},
        {"matmul", {{3, 5}, {5, 2}}, 3, 2},
        {"transpose", {{3, 4}}, 4, 3},
        {"scale", {{3, 4}}, 3, 4},
        {"tanh", {{3, 4}}, 3, 4},
        {"sigmoid", {{3, 4}}, 3, 4},
        {"concat_rows", {{2, 3}, {4, 3}}, 6, 3},
        {"concat_cols", {{3, 2}, {3, 1}}, 3, 3},
        {"slice_rows", {{5, 3}}, 2, 3},
        {"slice_cols", {{3, 5}}, 3, 3},
        {"sum", {{3, 4}}, 1, 1},
        {"mean_squared_diff", {{3, 4}, {3, 4}}, 1, 1},
    };
    return cases;
}

/// Output of op case `which` (index into op_cases()).
template <typename S>
BasicVar<S> build_op(std::size_t which, std::span<const BasicVar<S>> v) {
    switch (which) {
        case 0:
        case 1: return v[0] + v[1];
        case 2: return v[0] - v[1];
        case 3: return hadamard(v[0], v[1]);
        case 4: return matmul(v[0], v[1]);
        case 5: return transpose(v[0]);
        case 6: return scale(v[0], -1.7);
        case 7: return tanh(v[0]);
        case 8: return sigmoid(v[0]);
        case 9: return concat_rows(v);
        case 10: return concat_cols(v);
        case 11: return slice_rows(v[0], 1, 2);
        case 12: return slice_cols(v[0], 2, 3);
        case 13: return sum(v[0]);
        default: return mean_squared_difference(v[0], v[1]);
    }
}

/// Random non-zero biases keep LSTM states away from exact zeros, where
/// some parameter gradients shrink below what differences can resolve.
void randomize_biases(AutoencoderParams& params, Xoshiro256& rng) {
    for_each_parameter(params, [&](const std::string&, Tensor& t) {
        if (t.rows() == 1) {
            t = random_tensor(rng, 1, t.cols(), -0.5, 0.5);
        }
    });
}

TrainedModel toy_model(Xoshiro256& rng, std::uint64_t seed) {
    TrainedModel model;
    model.config = NetConfig{4, 3, 5, 2};
    model.params = init_params(model.config, seed);
    randomize_biases(model.params, rng);
    model.scaler.feature_names = {"u1", "i1", "u2", "i2"};
    model.scaler.min = RowVectorX<double>::Zero(4);
    model.scaler.max = RowVectorX<double>::Ones(4);
    model.scaler.constant.assign(4, false);
    return model;
}

}  // namespace

GradcheckSummary run_gradcheck_suite(std::uint64_t seed, int trials_per_op, double tolerance) {
    const auto start = std::chrono::steady_clock::now();
    Xoshiro256 rng(seed);
    GradcheckSummary summary;
    summary.tolerance = tolerance;
    auto record = [&](std::string name, double err) {
        summary.entries.push_back({std::move(name), err, err < tolerance});
    };

    // Every check projects its output onto fixed random weights, so each
    // output element reaches the scalar loss with a distinct coefficient.
    for (std::size_t which = 0; which < op_cases().size(); ++which) {
        const OpCase& op = op_cases()[which];
        double worst = 0.0;
        for (int trial = 0; trial < trials_per_op; ++trial) {
            std::vector<Tensor> inputs;
            for (const auto& [r, c] : op.shapes) {
                inputs.push_back(random_tensor(rng, r, c, -2.0, 2.0));
            }
            const Tensor weights = random_tensor(rng, op.out_rows, op.out_cols);
            const double err = grad_check(
                [&]<typename S>(BasicTape<S>& tape, std::span<const BasicVar<S>> v) {
                    return sum(hadamard(build_op<S>(which, v), tape.constant(weights.cast<S>())));
                },
                inputs);
            worst = std::max(worst, err);
        }
        record(std::string("op ") + op.name, worst);
    }

    {
        const NetConfig cfg{3, 3, 4, 2};
        AutoencoderParams params = init_params(cfg, seed + 1);
        const Tensor x = random_tensor(rng, 5, 3);
        const Tensor h0 = random_tensor(rng, 5, 4, -0.5, 0.5);
        const Tensor c0 = random_tensor(rng, 5, 4, -0.5, 0.5);
        std::vector<Tensor> inputs{params.encoder.input_weight, params.encoder.recurrent_weight,
                                   random_tensor(rng, 1, 16, -0.5, 0.5), x, h0, c0};
        const double err = grad_check(
            []<typename S>(BasicTape<S>&, std::span<const BasicVar<S>> v) {
                const BasicLSTMVars<S> p{transpose(v[0]), transpose(v[1]), v[2], 4};
                return sum(lstm_step(p, v[3], BasicLSTMState<S>{v[4], v[5]}).h);
            },
            inputs);
        record("lstm_step (params, input, state)", err);
    }

    {
        const NetConfig cfg{4, 3, 5, 2};
        AutoencoderParams params = init_params(cfg, seed + 2);
        randomize_biases(params, rng);
        const Tensor window = random_tensor(rng, 3, 4, 0.0, 1.0);
        const Tensor weights = random_tensor(rng, 3, 4);
        std::vector<Tensor> inputs = flatten(params);
        inputs.push_back(window);
        const double err = grad_check(
            [&]<typename S>(BasicTape<S>& tape, std::span<const BasicVar<S>> v) {
                const auto vars = autoencoder_vars<S>(v.first(10));
                std::vector<BasicVar<S>> steps;
                for (Index t = 0; t < 3; ++t) {
                    steps.push_back(slice_rows(v[10], t, 1));
                }
                const auto out = concat_rows<S>(autoencoder_forward<S>(vars, steps));
                return sum(hadamard(out, tape.constant(weights.cast<S>())));
            },
            inputs, 1e-4);
        record("autoencoder (parameters and input window)", err);
    }

    for (const std::vector<std::string>& missing :
         {std::vector<std::string>{"u1"}, std::vector<std::string>{"u2", "i1"}}) {
        const TrainedModel model = toy_model(rng, seed + 3);
        TimeSeriesSet data;
        data.feature_names = model.scaler.feature_names;
        data.dt = 1e-8;
        data.values = random_tensor(rng, 10, 4, 0.0, 1.0);
        const ReducedLossProblem problem(model, data, missing);
        std::vector<Tensor> x;
        for (std::size_t k = 0; k < missing.size(); ++k) {
            x.push_back(random_tensor(rng, 10, 1, 0.0, 1.0));
        }
        const double err =
            grad_check([&]<typename S>(BasicTape<S>& tape, std::span<const BasicVar<S>> v) { return problem.loss(tape, v); },
                       x, 1e-5);
        std::string name = "reduced loss wrt x_miss {";
        for (std::size_t k = 0; k < missing.size(); ++k) {
            name += (k ? "," : "") + missing[k];
        }
        record(name + "}", err);
    }

    summary.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return summary;
}

}  // namespace autorecon
