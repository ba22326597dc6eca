#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace autorecon {

struct GradcheckEntry {
    std::string name;
    double max_relative_error = 0.0;
    bool passed = false;
};

struct GradcheckSummary {
    std::vector<GradcheckEntry> entries;
    double tolerance = 1e-5;
    double seconds = 0.0;

    bool passed() const;
    double worst() const;
};

/// Compares reverse-mode gradients against central differences for every
/// tape operation, the LSTM cell, the autoencoder (parameters and input
/// window) and the reduced loss with respect to one and two missing series.
/// Inputs are drawn from xoshiro256** seeded with `seed`.
GradcheckSummary run_gradcheck_suite(std::uint64_t seed, int trials_per_op = 10, double tolerance = 1e-5);

}  // namespace autorecon
