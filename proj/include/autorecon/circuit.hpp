#pragma once

// Nonlinear second-order filter used to generate fully equipped datasets:
//
//   u1 --R1--L--+-- u2
//               |      |
//             C(u2)  Rload
//               |      |
//              gnd    gnd
//
// State x = (i1, u2), integrated with classical fourth-order Runge-Kutta:
//   di1/dt = (u1 - R1*i1 - u2) / L
//   du2/dt = (i1 - u2/Rload) / C(u2),   C(u) = C0 / (1 + (u/V0)^2)

#include "autorecon/preprocess.hpp"
#include "autorecon/tensor.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace autorecon {

struct CircuitParams {
    double r1 = 1.0;          // ohm
    double inductance = 1e-5; // henry
    double c0 = 1e-6;         // farad at zero bias
    double v0 = 5.0;          // volt, bias at which C halves
    double r_load = 10.0;     // ohm

    void validate() const;
};

/// Voltage-dependent capacitance C0 / (1 + (u/V0)^2).
double capacitance(double u, const CircuitParams& p);

struct DcTerm {
    double level = 0.0;
};

/// amplitude * sin(2*pi*frequency*t + phase)
struct SineTerm {
    double amplitude = 0.0;
    double frequency = 0.0;
    double phase = 0.0;
};

/// Periodic trapezoid starting at `low` at t = 0: ramp up over `rise`, hold
/// `high` for `high_time`, ramp down over `fall`, rest at `low`.
struct TrapezoidTerm {
    double low = 0.0;
    double high = 1.0;
    double rise = 0.0;
    double high_time = 0.0;
    double fall = 0.0;
    double period = 0.0;
};

using WaveformTerm = std::variant<DcTerm, SineTerm, TrapezoidTerm>;

/// Source voltage as a sum of terms.
struct WaveformSpec {
    std::vector<WaveformTerm> terms;

    double operator()(double t) const;
    void validate() const;
};

struct SimOutput {
    /// Features u1, i1, u2, i2 sampled at t = k*dt.
    TimeSeriesSet series;
    /// du2/dt at every grid point, from the integrator's first stage.
    Eigen::VectorXd du2_dt;
    std::vector<std::string> warnings;
};

inline const std::vector<std::string>& circuit_feature_names() {
    static const std::vector<std::string> names{"u1", "i1", "u2", "i2"};
    return names;
}

/// Integrates `samples` grid points from a zero initial state. Throws
/// NumericalError with the sample index if the state stops being finite;
/// adds a warning when dt is coarse relative to the circuit time constants.
SimOutput simulate(const CircuitParams& p, const WaveformSpec& source, double dt, Index samples);

/// max_k |i1 - C(u2) du2/dt - u2/Rload| over the output.
double kcl_residual(const CircuitParams& p, const SimOutput& out);

struct SuiteConfig {
    std::uint64_t seed = 7;
    Index samples = 2000;
    double dt = 1e-8;
    CircuitParams circuit;
};

struct SuiteEntry {
    std::string name;
    std::string description;
    WaveformSpec source;
    SimOutput output;
};

struct SimSuite {
    std::vector<SuiteEntry> training;
    std::vector<SuiteEntry> test;
};

/// Six training sets, each a different combination of DC, low-frequency
/// sine, high-frequency sine and trapezoid terms, plus one test set with a
/// combination none of them uses. Amplitudes, frequencies and phases are
/// drawn from xoshiro256** seeded with config.seed.
SimSuite generate_suite(const SuiteConfig& config);

/// Linear interpolation of irregular samples onto t = times[0] + k*dt up to
/// the last time stamp. `times` must be strictly increasing.
TimeSeriesSet resample_equidistant(std::span<const double> times, const Tensor& values,
                                   std::vector<std::string> feature_names, double dt);

std::string describe(const WaveformSpec& spec);

}  // namespace autorecon
