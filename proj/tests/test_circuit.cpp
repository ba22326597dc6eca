#include "autorecon/circuit.hpp"
#include "autorecon/error.hpp"

#include "doctest.h"
#include "support.hpp"

#include <cmath>
#include <numbers>

using namespace autorecon;

TEST_CASE("capacitance halves at the bias voltage") {
    const CircuitParams p;
    CHECK(capacitance(0.0, p) == 1e-6);
    CHECK(capacitance(5.0, p) == doctest::Approx(0.5e-6).epsilon(1e-15));
    CHECK(capacitance(-5.0, p) == capacitance(5.0, p));
    CHECK(capacitance(10.0, p) == doctest::Approx(0.2e-6).epsilon(1e-15));
}

TEST_CASE("waveform terms") {
    WaveformSpec w;
    CHECK(w(1.0) == 0.0);
    CHECK(describe(w) == "zero");
    w.terms = {DcTerm{1.5}, SineTerm{2.0, 1000.0, 0.0}};
    CHECK(w(0.0) == 1.5);
    CHECK(w(0.25e-3) == doctest::Approx(3.5).epsilon(1e-12));

    WaveformSpec trap;
    trap.terms = {TrapezoidTerm{-1.0, 3.0, 1.0, 2.0, 1.0, 6.0}};
    CHECK(trap(0.0) == -1.0);
    CHECK(trap(0.5) == 1.0);
    CHECK(trap(2.0) == 3.0);
    CHECK(trap(3.5) == 1.0);
    CHECK(trap(5.0) == -1.0);
    CHECK(trap(6.5) == 1.0);  // next period
}

TEST_CASE("waveform validation") {
    WaveformSpec w;
    w.terms = {SineTerm{1.0, 0.0, 0.0}};
    CHECK_THROWS_AS(w.validate(), ValidationError);
    w.terms = {TrapezoidTerm{0.0, 1.0, 1.0, 1.0, 1.0, 2.0}};
    CHECK_THROWS_AS(w.validate(), ValidationError);
    w.terms = {TrapezoidTerm{0.0, 1.0, 0.0, 1.0, 1.0, 5.0}};
    CHECK_THROWS_AS(w.validate(), ValidationError);
    w.terms = {TrapezoidTerm{0.0, 1.0, 1.0, 1.0, 1.0, 3.0}};
    CHECK_NOTHROW(w.validate());
}

TEST_CASE("circuit parameters must be positive") {
    CircuitParams p;
    p.r_load = 0.0;
    CHECK_THROWS_AS(p.validate(), ValidationError);
    CHECK_THROWS_AS(simulate(p, WaveformSpec{}, 1e-8, 10), ValidationError);
    CHECK_THROWS_AS(simulate(CircuitParams{}, WaveformSpec{}, 0.0, 10), ValidationError);
    CHECK_THROWS_AS(simulate(CircuitParams{}, WaveformSpec{}, 1e-8, 1), ValidationError);
}

TEST_CASE("zero source keeps the circuit at rest") {
    const SimOutput out = simulate(CircuitParams{}, WaveformSpec{}, 1e-8, 300);
    CHECK(out.series.feature_names == circuit_feature_names());
    CHECK(out.series.length() == 300);
    CHECK(out.series.values.isZero(0.0));
    CHECK(out.du2_dt.isZero(0.0));
    CHECK(out.warnings.empty());
}

TEST_CASE("DC source settles at the resistive divider") {
    const CircuitParams p;
    WaveformSpec dc;
    dc.terms = {DcTerm{5.0}};
    const SimOutput out = simulate(p, dc, 1e-8, 200000);
    const auto last = out.series.values.row(out.series.length() - 1);
    CHECK(last(0) == 5.0);
    CHECK(last(1) == doctest::Approx(5.0 / 11.0).epsilon(1e-6));
    CHECK(last(2) == doctest::Approx(50.0 / 11.0).epsilon(1e-6));
    CHECK(last(3) == doctest::Approx(5.0 / 11.0).epsilon(1e-6));
}

TEST_CASE("i2 is u2 over the load") {
    WaveformSpec w;
    w.terms = {SineTerm{3.0, 1e5, 0.1}};
    const CircuitParams p;
    const SimOutput out = simulate(p, w, 1e-8, 500);
    CHECK(testing::bitwise_equal(Tensor(out.series.values.col(3)), Tensor(out.series.values.col(2) / p.r_load)));
    CHECK(out.series.dt == 1e-8);
    CHECK(out.series.t0 == 0.0);
}

TEST_CASE("fourth-order convergence") {
    const CircuitParams p;
    WaveformSpec smooth;
    smooth.terms = {DcTerm{1.0}, SineTerm{2.0, 2e5, 0.3}};
    const double h = 4e-8;
    const Index n = 500;
    auto endpoint = [&](int refine) {
        const SimOutput out = simulate(p, smooth, h / refine, n * refine - (refine - 1));
        const auto& v = out.series.values;
        return Eigen::Vector2d(v(v.rows() - 1, 1), v(v.rows() - 1, 2));
    };
    const Eigen::Vector2d reference = endpoint(8);
    const double ratio = (endpoint(1) - reference).norm() / (endpoint(2) - reference).norm();
    CHECK(ratio >= 12.0);
    CHECK(ratio <= 20.0);
}

TEST_CASE("KCL holds on every generated dataset") {
    const SuiteConfig cfg;
    const SimSuite suite = generate_suite(cfg);
    for (const auto* group : {&suite.training, &suite.test}) {
        for (const SuiteEntry& e : *group) {
            CAPTURE(e.name);
            const double limit = 1e-6 * e.output.series.values.col(1).cwiseAbs().maxCoeff();
            CHECK(kcl_residual(cfg.circuit, e.output) < limit);
        }
    }
}

TEST_CASE("suite layout and determinism") {
    SuiteConfig cfg;
    cfg.samples = 200;
    const SimSuite a = generate_suite(cfg);
    const SimSuite b = generate_suite(cfg);
    REQUIRE(a.training.size() == 6);
    REQUIRE(a.test.size() == 1);
    for (std::size_t k = 0; k < 6; ++k) {
        CHECK(a.training[k].name == "train_" + std::to_string(k));
        CHECK(a.training[k].output.series.length() == 200);
        CHECK(testing::bitwise_equal(a.training[k].output.series.values, b.training[k].output.series.values));
        CHECK(a.training[k].description != a.test[0].description);
    }
    CHECK(testing::bitwise_equal(a.test[0].output.series.values, b.test[0].output.series.values));
    cfg.seed = 8;
    CHECK_FALSE(testing::bitwise_equal(generate_suite(cfg).training[0].output.series.values,
                                       a.training[0].output.series.values));
}

TEST_CASE("coarse dt is flagged") {
    WaveformSpec w;
    w.terms = {DcTerm{1.0}};
    const SimOutput fine = simulate(CircuitParams{}, w, 1e-8, 10);
    CHECK(fine.warnings.empty());
    const SimOutput coarse = simulate(CircuitParams{}, w, 2e-6, 10);
    CHECK(coarse.warnings.size() == 1);
}

TEST_CASE("blow-up is reported with the sample index") {
    WaveformSpec w;
    w.terms = {DcTerm{5.0}};
    try {
        (void)simulate(CircuitParams{}, w, 1e-4, 1000);
        FAIL("expected a numerical error");
    } catch (const NumericalError& e) {
        CHECK(std::string(e.what()).find("sample") != std::string::npos);
    }
}

TEST_CASE("resampling onto an equidistant grid") {
    const std::vector<double> times{0.0, 1.0, 3.0, 4.0};
    Tensor v(4, 2);
    v << 0, 10, 1, 20, 3, 0, 4, 5;
    const TimeSeriesSet s = resample_equidistant(times, v, {"a", "b"}, 0.5);
    REQUIRE(s.length() == 9);
    CHECK(s.dt == 0.5);
    CHECK(s.values(0, 0) == 0.0);
    CHECK(s.values(1, 1) == 15.0);
    CHECK(s.values(3, 0) == 1.5);  // t = 1.5, the first column is t itself
    CHECK(s.values(4, 1) == 10.0);
    CHECK(s.values(8, 0) == 4.0);
    CHECK(s.values(8, 1) == 5.0);

    // identity on an already equidistant grid
    const std::vector<double> grid{2.0, 2.25, 2.5};
    const Tensor g = testing::mat({{1}, {2}, {4}});
    CHECK(resample_equidistant(grid, g, {"x"}, 0.25).values == g);

    const std::vector<double> bad{0.0, 1.0, 1.0};
    CHECK_THROWS_AS(resample_equidistant(bad, testing::mat({{1}, {2}, {3}}), {"x"}, 0.5), ValidationError);
    CHECK_THROWS_AS(resample_equidistant(times, v.topRows(3), {"a", "b"}, 0.5), ValidationError);
}
