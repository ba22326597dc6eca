#include "autorecon/error.hpp"
#include "autorecon/eval.hpp"

#include "doctest.h"
#include "support.hpp"

#include <cmath>
#include <complex>
#include <numbers>

using namespace autorecon;

namespace {

std::vector<double> column(const Tensor& t, Index j) {
    std::vector<double> v(static_cast<std::size_t>(t.rows()));
    for (Index i = 0; i < t.rows(); ++i) {
        v[static_cast<std::size_t>(i)] = t(i, j);
    }
    return v;
}

}  // namespace

TEST_CASE("RMSE examples") {
    const std::vector<double> a{1.0, 2.0, 3.0, 4.0};
    const std::vector<double> b{2.0, 3.0, 4.0, 5.0};
    const FeatureReport same = compare_series("a", a, a);
    CHECK(same.rmse == 0.0);
    CHECK(same.relative_rmse == 0.0);
    const FeatureReport offset = compare_series("a", a, b);
    CHECK(offset.mse == 1.0);
    CHECK(offset.rmse == 1.0);
    // population std of 1..4 is sqrt(1.25)
    CHECK(offset.relative_rmse == doctest::Approx(1.0 / std::sqrt(1.25)).epsilon(1e-14));

    // zero prediction of a zero-mean unit-std signal
    const std::vector<double> pm{1.0, -1.0, 1.0, -1.0};
    const std::vector<double> zero(4, 0.0);
    CHECK(compare_series("s", pm, zero).relative_rmse == 1.0);

    CHECK_THROWS_AS(compare_series("a", a, std::span<const double>(pm).first(3)), ValidationError);
}

TEST_CASE("relative RMSE of a constant reference") {
    const std::vector<double> c(5, 2.0);
    CHECK(compare_series("c", c, c).relative_rmse == 0.0);
    std::vector<double> off = c;
    off[0] = 3.0;
    CHECK(std::isinf(compare_series("c", c, off).relative_rmse));
}

TEST_CASE("rmse_per_feature matches by name") {
    TimeSeriesSet ref;
    ref.feature_names = {"a", "b"};
    ref.values = testing::mat({{0, 1}, {0, 2}, {0, 3}});
    TimeSeriesSet est;
    est.feature_names = {"b", "a"};
    est.values = testing::mat({{1, 1}, {2, 1}, {3, 1}});
    const auto r = rmse_per_feature(ref, est);
    REQUIRE(r.size() == 2);
    CHECK(r[0].feature == "a");
    CHECK(r[0].rmse == 1.0);
    CHECK(r[1].feature == "b");
    CHECK(r[1].rmse == 0.0);
    est.feature_names = {"b", "x"};
    CHECK_THROWS_AS(rmse_per_feature(ref, est), ValidationError);
}

TEST_CASE("sine on an exact bin shows its amplitude") {
    const std::size_t n = 200;
    const double dt = 1e-3;
    std::vector<double> x(n);
    for (std::size_t t = 0; t < n; ++t) {
        x[t] = 2.0 * std::sin(2.0 * std::numbers::pi * 10.0 * static_cast<double>(t) / static_cast<double>(n) + 0.4);
    }
    const Spectrum s = amplitude_spectrum(x, dt);
    REQUIRE(s.magnitude.size() == n / 2 + 1);
    CHECK(s.magnitude[10] == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(s.frequency_hz[10] == doctest::Approx(10.0 / (n * dt)).epsilon(1e-12));
    for (std::size_t k = 0; k < s.magnitude.size(); ++k) {
        if (k != 10) {
            CHECK(s.magnitude[k] < 1e-9);
        }
    }
}

TEST_CASE("DC level shows in bin zero") {
    const std::vector<double> x(64, 3.0);
    const Spectrum s = amplitude_spectrum(x, 0.5);
    CHECK(s.magnitude[0] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(s.frequency_hz[0] == 0.0);
    CHECK(s.magnitude[5] < 1e-12);
}

TEST_CASE("spectrum length is floor(T/2)+1") {
    for (const std::size_t n : {2u, 3u, 7u, 8u, 101u}) {
        CHECK(amplitude_spectrum(std::vector<double>(n, 1.0), 1.0).magnitude.size() == n / 2 + 1);
    }
    CHECK_THROWS_AS(amplitude_spectrum(std::vector<double>(1, 1.0), 1.0), ValidationError);
    CHECK_THROWS_AS(amplitude_spectrum(std::vector<double>(4, 1.0), 0.0), ValidationError);
}

TEST_CASE("Parseval on random input") {
    Xoshiro256 rng(11);
    for (const Index n : {16, 33, 128}) {
        const std::vector<double> x = column(testing::random_tensor(rng, n, 1, -3.0, 3.0), 0);
        double energy = 0.0;
        for (double v : x) {
            energy += v * v;
        }
        const double recovered = spectrum_energy(amplitude_spectrum(x, 1.0), n);
        CHECK(std::abs(recovered - energy) <= 1e-9 * energy);
    }
}

TEST_CASE("matches a complex DFT for short series") {
    Xoshiro256 rng(12);
    for (const Index n : {5, 16, 37, 64}) {
        const std::vector<double> x = column(testing::random_tensor(rng, n, 1), 0);
        const Spectrum s = amplitude_spectrum(x, 1.0);
        for (Index k = 0; k <= n / 2; ++k) {
            std::complex<long double> acc = 0;
            for (Index t = 0; t < n; ++t) {
                const long double angle = -2.0L * std::numbers::pi_v<long double> * k * t / n;
                acc += static_cast<long double>(x[static_cast<std::size_t>(t)]) *
                       std::complex<long double>(std::cos(angle), std::sin(angle));
            }
            const bool edge = k == 0 || 2 * k == n;
            const double expected = static_cast<double>(std::abs(acc) / n) * (edge ? 1.0 : 2.0);
            CAPTURE(n);
            CAPTURE(k);
            CHECK(std::abs(s.magnitude[static_cast<std::size_t>(k)] - expected) < 1e-12);
        }
    }
}
