#pragma once

#include "autorecon/preprocess.hpp"

#include <span>
#include <string>
#include <vector>

namespace autorecon {

/// One-sided amplitude spectrum. A sine of amplitude A on an exact bin shows
/// magnitude A; DC shows its level. No window function is applied.
struct Spectrum {
    std::vector<double> frequency_hz;
    std::vector<double> magnitude;
};

struct FeatureReport {
    std::string feature;
    double mse = 0.0;
    double rmse = 0.0;
    /// RMSE divided by the population standard deviation of the reference.
    double relative_rmse = 0.0;
    Spectrum spectrum;
};

/// Error of `estimate` against `reference` per feature (matched by name,
/// reference order). Spectra are left empty.
std::vector<FeatureReport> rmse_per_feature(const TimeSeriesSet& reference, const TimeSeriesSet& estimate);

/// Time-domain metrics for two equally long columns.
FeatureReport compare_series(const std::string& feature, std::span<const double> reference,
                             std::span<const double> estimate);

/// Direct O(T^2) discrete Fourier transform, bins k = 0 .. floor(T/2) at
/// k / (T*dt) Hz. Magnitudes are |X_k|/T for DC and Nyquist, 2|X_k|/T else.
Spectrum amplitude_spectrum(std::span<const double> series, double dt);

/// Sum of squared samples recovered from a one-sided spectrum of a length T
/// series; equals the time-domain energy (Parseval).
double spectrum_energy(const Spectrum& spectrum, Index length);

}  // namespace autorecon
