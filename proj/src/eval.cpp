#include "autorecon/eval.hpp"

#include "autorecon/error.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace autorecon {

FeatureReport compare_series(const std::string& feature, std::span<const double> reference,
                             std::span<const double> estimate) {
    if (reference.size() != estimate.size() || reference.empty()) {
        throw ValidationError("compare '" + feature + "': lengths " + std::to_string(reference.size()) + " and " +
                              std::to_string(estimate.size()) + " differ or are empty");
    }
    const double n = static_cast<double>(reference.size());
    double sq = 0.0;
    double mean = 0.0;
    for (std::size_t k = 0; k < reference.size(); ++k) {
        const double d = estimate[k] - reference[k];
        sq += d * d;
        mean += reference[k];
    }
    mean /= n;
    double var = 0.0;
    for (const double r : reference) {
        var += (r - mean) * (r - mean);
    }
    var /= n;

    FeatureReport report;
    report.feature = feature;
    report.mse = sq / n;
    report.rmse = std::sqrt(report.mse);
    if (var > 0.0) {
        report.relative_rmse = report.rmse / std::sqrt(var);
    } else {
        report.relative_rmse = report.rmse == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    }
    return report;
}

std::vector<FeatureReport> rmse_per_feature(const TimeSeriesSet& reference, const TimeSeriesSet& estimate) {
    if (reference.length() != estimate.length()) {
        throw ValidationError("rmse_per_feature: lengths " + std::to_string(reference.length()) + " and " +
                              std::to_string(estimate.length()) + " differ");
    }
    if (reference.feature_names.size() != estimate.feature_names.size()) {
        throw ValidationError("rmse_per_feature: feature sets differ");
    }
    std::vector<FeatureReport> out;
    for (std::size_t j = 0; j < reference.feature_names.size(); ++j) {
        const std::string& name = reference.feature_names[j];
        const Eigen::VectorXd a = reference.values.col(static_cast<Index>(j));
        const Eigen::VectorXd b = estimate.values.col(estimate.index_of(name));
        out.push_back(compare_series(name, {a.data(), static_cast<std::size_t>(a.size())},
                                     {b.data(), static_cast<std::size_t>(b.size())}));
    }
    return out;
}

Spectrum amplitude_spectrum(std::span<const double> series, double dt) {
    const std::size_t n = series.size();
    if (n < 2) {
        throw ValidationError("amplitude_spectrum: at least two samples required");
    }
    if (!(dt > 0.0)) {
        throw ValidationError("amplitude_spectrum: dt must be positive");
    }
    const std::size_t bins = n / 2 + 1;
    Spectrum s;
    s.frequency_hz.resize(bins);
    s.magnitude.resize(bins);
    const double step = 2.0 * std::numbers::pi / static_cast<double>(n);
    for (std::size_t k = 0; k < bins; ++k) {
        double re = 0.0;
        double im = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            // Reduce k*t modulo n so the angle stays in [0, 2*pi).
            const double angle = step * static_cast<double>((k * t) % n);
            re += series[t] * std::cos(angle);
            im -= series[t] * std::sin(angle);
        }
        const bool edge = k == 0 || (n % 2 == 0 && k == n / 2);
        s.frequency_hz[k] = static_cast<double>(k) / (static_cast<double>(n) * dt);
        s.magnitude[k] = (edge ? 1.0 : 2.0) * std::hypot(re, im) / static_cast<double>(n);
    }
    return s;
}

double spectrum_energy(const Spectrum& spectrum, Index length) {
    const std::size_t n = static_cast<std::size_t>(length);
    double energy = 0.0;
    for (std::size_t k = 0; k < spectrum.magnitude.size(); ++k) {
        const bool edge = k == 0 || (n % 2 == 0 && k == n / 2);
        const double m = spectrum.magnitude[k];
        energy += edge ? m * m : 0.5 * m * m;
    }
    return energy * static_cast<double>(n);
}

}  // namespace autorecon
