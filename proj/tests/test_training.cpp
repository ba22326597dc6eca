#include "autorecon/error.hpp"
#include "autorecon/training.hpp"

#include "doctest.h"
#include "support.hpp"

#include <cmath>

using namespace autorecon;

namespace {

TimeSeriesSet wave(double phase, Index length = 60) {
    TimeSeriesSet s;
    s.feature_names = {"a", "b", "c"};
    s.dt = 0.1;
    s.values.resize(length, 3);
    for (Index i = 0; i < length; ++i) {
        const double t = 0.1 * static_cast<double>(i);
        s.values(i, 0) = std::sin(t + phase);
        s.values(i, 1) = 0.5 * std::cos(t + phase);
        s.values(i, 2) = s.values(i, 0) + 0.2;
    }
    return s;
}

TrainConfig small_config(int epochs) {
    TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.learning_rate = 0.01;
    cfg.seed = 3;
    cfg.net = NetConfig{3, 3, 6, 2};
    return cfg;
}

}  // namespace

TEST_CASE("dataset order rotates each epoch") {
    CHECK(dataset_order(0, 4) == std::vector<int>{0, 1, 2, 3});
    CHECK(dataset_order(1, 4) == std::vector<int>{1, 2, 3, 0});
    CHECK(dataset_order(6, 4) == std::vector<int>{2, 3, 0, 1});
    CHECK(dataset_order(5, 1) == std::vector<int>{0});
}

TEST_CASE("zero epochs returns the initial parameters and no history") {
    const std::vector<TimeSeriesSet> sets{wave(0.0)};
    const TrainResult r = train(sets, small_config(0));
    CHECK(r.history.empty());
    CHECK(r.model.params == init_params(r.model.config, 3));
}

TEST_CASE("six datasets give six loss curves of length epochs") {
    std::vector<TimeSeriesSet> sets;
    for (int k = 0; k < 6; ++k) {
        sets.push_back(wave(0.4 * k, 30));
    }
    const int epochs = 4;
    const TrainResult r = train(sets, small_config(epochs));
    REQUIRE(r.history.size() == 24);
    std::vector<int> per_dataset(6, 0);
    for (std::size_t u = 0; u < r.history.size(); ++u) {
        const LossRecord& rec = r.history[u];
        // update u is the (u mod 6)-th visit of epoch u / 6
        CHECK(rec.epoch == static_cast<int>(u / 6));
        CHECK(rec.dataset == dataset_order(rec.epoch, 6)[u % 6]);
        ++per_dataset[static_cast<std::size_t>(rec.dataset)];
        CHECK(std::isfinite(rec.loss));
    }
    for (int c : per_dataset) {
        CHECK(c == epochs);
    }
    // no dataset is always last
    CHECK(r.history[5].dataset != r.history[11].dataset);
}

TEST_CASE("training is reproducible") {
    const std::vector<TimeSeriesSet> sets{wave(0.0), wave(1.0)};
    const TrainResult a = train(sets, small_config(5));
    const TrainResult b = train(sets, small_config(5));
    CHECK(a.model.params == b.model.params);
    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t k = 0; k < a.history.size(); ++k) {
        CHECK(a.history[k].loss == b.history[k].loss);
    }
    TrainConfig other = small_config(5);
    other.seed = 4;
    CHECK_FALSE(train(sets, other).model.params == a.model.params);
}

TEST_CASE("every update changes the parameters once per dataset") {
    const std::vector<TimeSeriesSet> sets{wave(0.0), wave(2.0), wave(4.0)};
    int updates = 0;
    const TrainResult r = train(sets, small_config(3), [&](const LossRecord&) { ++updates; });
    CHECK(updates == 9);
    CHECK(r.history.size() == 9);
}

TEST_CASE("constant dataset is learned") {
    TimeSeriesSet s;
    s.feature_names = {"a", "b", "c", "d"};
    s.values = Tensor(30, 4);
    s.values.col(0).setConstant(2.0);
    s.values.col(1).setConstant(-1.0);
    s.values.col(2).setConstant(0.0);
    s.values.col(3).setConstant(7.5);
    // Adam moves a weight by at most lr per step; 200 steps at 0.001 cannot
    // cover the 0.5 gap between the initial output and the scaled target
    TrainConfig cfg;
    cfg.epochs = 200;
    cfg.learning_rate = 0.005;
    const TrainResult r = train(std::span(&s, 1), cfg);
    CHECK(r.history.back().loss < 1e-4);
    CHECK(r.model.metadata.final_losses[0] == r.history.back().loss);
}

TEST_CASE("evaluate_model on a training set after convergence") {
    const std::vector<TimeSeriesSet> sets{wave(0.0), wave(1.5)};
    const TrainResult r = train(sets, small_config(300));
    const double final_loss = r.model.metadata.final_losses[0];
    const Evaluation ev = evaluate_model(r.model, sets[0]);
    CHECK(ev.reconstruction.length() == sets[0].length());
    CHECK(ev.reconstruction.feature_names == sets[0].feature_names);
    double mean_scaled = 0.0;
    for (double m : ev.mse_scaled) {
        mean_scaled += m / 3.0;
    }
    CHECK(mean_scaled <= 2.0 * final_loss);
    CHECK(final_loss < 0.01);
}

TEST_CASE("zero network reconstructs the training minimum") {
    const std::vector<TimeSeriesSet> sets{wave(0.0)};
    TrainedModel model = train(sets, small_config(0)).model;
    model.params = zero_params(model.config);
    const Evaluation ev = evaluate_model(model, sets[0]);
    for (Index j = 0; j < 3; ++j) {
        CHECK((ev.reconstruction.values.col(j).array() == model.scaler.min(j)).all());
        CHECK(ev.mse_scaled[static_cast<std::size_t>(j)] > 0.1);
    }
}

TEST_CASE("evaluate_model matches features by name") {
    const std::vector<TimeSeriesSet> sets{wave(0.0)};
    const TrainedModel model = train(sets, small_config(2)).model;
    TimeSeriesSet shuffled = sets[0];
    shuffled.feature_names = {"c", "a", "b"};
    shuffled.values.col(0) = sets[0].values.col(2);
    shuffled.values.col(1) = sets[0].values.col(0);
    shuffled.values.col(2) = sets[0].values.col(1);
    const Evaluation a = evaluate_model(model, sets[0]);
    const Evaluation b = evaluate_model(model, shuffled);
    CHECK(testing::bitwise_equal(a.reconstruction.values, b.reconstruction.values));
    TimeSeriesSet wrong = sets[0];
    wrong.feature_names = {"a", "b", "x"};
    CHECK_THROWS_AS(evaluate_model(model, wrong), ValidationError);
}

TEST_CASE("training rejects bad input") {
    const std::vector<TimeSeriesSet> none;
    CHECK_THROWS_AS(train(none, small_config(1)), ValidationError);
    TimeSeriesSet other = wave(0.0);
    other.feature_names = {"a", "b", "z"};
    const std::vector<TimeSeriesSet> mixed{wave(0.0), other};
    CHECK_THROWS_AS(train(mixed, small_config(1)), ValidationError);
    TrainConfig bad = small_config(1);
    bad.learning_rate = -1.0;
    const std::vector<TimeSeriesSet> one{wave(0.0)};
    CHECK_THROWS_AS(train(one, bad), ValidationError);
}

TEST_CASE("divergence aborts with the epoch") {
    const std::vector<TimeSeriesSet> sets{wave(0.0)};
    TrainConfig cfg = small_config(50);
    cfg.learning_rate = 1e200;
    try {
        (void)train(sets, cfg);
        FAIL("expected divergence");
    } catch (const NumericalError& e) {
        CHECK(std::string(e.what()).find("epoch") != std::string::npos);
    }
}

TEST_CASE("flatten and unflatten are inverse") {
    const AutoencoderParams p = init_params(NetConfig{}, 1);
    AutoencoderParams q = zero_params(NetConfig{});
    unflatten(flatten(p), q);
    CHECK(p == q);
}
