#include "autorecon/circuit.hpp"

#include "autorecon/error.hpp"
#include "autorecon/random.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace autorecon {

void CircuitParams::validate() const {
    if (!(r1 > 0.0 && inductance > 0.0 && c0 > 0.0 && v0 > 0.0 && r_load > 0.0)) {
        throw ValidationError("circuit parameters must all be strictly positive");
    }
}

double capacitance(double u, const CircuitParams& p) {
    const double x = u / p.v0;
    return p.c0 / (1.0 + x * x);
}

namespace {

double trapezoid(const TrapezoidTerm& w, double t) {
    double phase = std::fmod(t, w.period);
    if (phase < 0.0) {
        phase += w.period;
    }
    if (phase < w.rise) {
        return w.low + (w.high - w.low) * phase / w.rise;
    }
    phase -= w.rise;
    if (phase < w.high_time) {
        return w.high;
    }
    phase -= w.high_time;
    if (phase < w.fall) {
        return w.high - (w.high - w.low) * phase / w.fall;
    }
    return w.low;
}

struct TermValue {
    double t;
    double operator()(const DcTerm& w) const { return w.level; }
    double operator()(const SineTerm& w) const {
        return w.amplitude * std::sin(2.0 * std::numbers::pi * w.frequency * t + w.phase);
    }
    double operator()(const TrapezoidTerm& w) const { return trapezoid(w, t); }
};

}  // namespace

double WaveformSpec::operator()(double t) const {
    double v = 0.0;
    for (const auto& term : terms) {
        v += std::visit(TermValue{t}, term);
    }
    return v;
}

void WaveformSpec::validate() const {
    for (const auto& term : terms) {
        if (const auto* s = std::get_if<SineTerm>(&term)) {
            if (!(s->frequency > 0.0)) {
                throw ValidationError("sine frequency must be positive");
            }
        } else if (const auto* w = std::get_if<TrapezoidTerm>(&term)) {
            if (!(w->rise > 0.0 && w->high_time > 0.0 && w->fall > 0.0 && w->period > 0.0)) {
                throw ValidationError("trapezoid segment times must be positive");
            }
            if (w->rise + w->high_time + w->fall > w->period) {
                throw ValidationError("trapezoid segments exceed the period");
            }
        }
    }
}

std::string describe(const WaveformSpec& spec) {
    std::ostringstream os;
    os.precision(6);
    bool first = true;
    for (const auto& term : spec.terms) {
        if (!first) {
            os << " + ";
        }
        first = false;
        if (const auto* d = std::get_if<DcTerm>(&term)) {
            os << "dc(" << d->level << ")";
        } else if (const auto* s = std::get_if<SineTerm>(&term)) {
            os << "sine(" << s->amplitude << ", " << s->frequency << " Hz, " << s->phase << " rad)";
        } else {
            const auto& w = std::get<TrapezoidTerm>(term);
            os << "trapezoid(" << w.low << ".." << w.high << ", rise " << w.rise << ", high " << w.high_time
               << ", fall " << w.fall << ", period " << w.period << ")";
        }
    }
    return first ? "zero" : os.str();
}

SimOutput simulate(const CircuitParams& p, const WaveformSpec& source, double dt, Index samples) {
    p.validate();
    source.validate();
    if (!(dt > 0.0)) {
        throw ValidationError("simulate: dt must be positive");
    }
    if (samples < 2) {
        throw ValidationError("simulate: at least two samples required");
    }

    SimOutput out;
    const double omega = 1.0 / std::sqrt(p.inductance * p.c0);
    const double fastest = std::max({omega, p.r1 / p.inductance, 1.0 / (p.r_load * p.c0)});
    if (dt * fastest > 0.5) {
        out.warnings.push_back("dt = " + std::to_string(dt) + " s is coarse relative to the circuit time constant " +
                               std::to_string(1.0 / fastest) + " s");
    }

    auto rhs = [&](double t, double i1, double u2, double& di1, double& du2) {
        di1 = (source(t) - p.r1 * i1 - u2) / p.inductance;
        du2 = (i1 - u2 / p.r_load) / capacitance(u2, p);
    };

    out.series.feature_names = circuit_feature_names();
    out.series.t0 = 0.0;
    out.series.dt = dt;
    out.series.values.resize(samples, 4);
    out.du2_dt.resize(samples);

    double i1 = 0.0;
    double u2 = 0.0;
    for (Index k = 0; k < samples; ++k) {
        const double t = static_cast<double>(k) * dt;
        double a1, b1;
        rhs(t, i1, u2, a1, b1);
        out.series.values.row(k) << source(t), i1, u2, u2 / p.r_load;
        out.du2_dt(k) = b1;
        if (k + 1 == samples) {
            break;
        }
        double a2, b2, a3, b3, a4, b4;
        rhs(t + 0.5 * dt, i1 + 0.5 * dt * a1, u2 + 0.5 * dt * b1, a2, b2);
        rhs(t + 0.5 * dt, i1 + 0.5 * dt * a2, u2 + 0.5 * dt * b2, a3, b3);
        rhs(t + dt, i1 + dt * a3, u2 + dt * b3, a4, b4);
        i1 += dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        u2 += dt / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
        if (!std::isfinite(i1) || !std::isfinite(u2)) {
            throw NumericalError("simulate: state became non-finite at sample " + std::to_string(k + 1));
        }
    }
    return out;
}

double kcl_residual(const CircuitParams& p, const SimOutput& out) {
    const TimeSeriesSet& s = out.series;
    const Index i1 = s.index_of("i1");
    const Index u2 = s.index_of("u2");
    double worst = 0.0;
    for (Index k = 0; k < s.length(); ++k) {
        const double v = s.values(k, u2);
        const double r = s.values(k, i1) - capacitance(v, p) * out.du2_dt(k) - v / p.r_load;
        worst = std::max(worst, std::abs(r));
    }
    return worst;
}

namespace {

DcTerm random_dc(Xoshiro256& rng) { return {rng.uniform(-3.0, 5.0)}; }

SineTerm random_low_sine(Xoshiro256& rng) {
    return {rng.uniform(1.0, 4.0), rng.uniform(15e3, 40e3), rng.uniform(0.0, 2.0 * std::numbers::pi)};
}

SineTerm random_high_sine(Xoshiro256& rng) {
    return {rng.uniform(0.5, 2.0), rng.uniform(150e3, 400e3), rng.uniform(0.0, 2.0 * std::numbers::pi)};
}

TrapezoidTerm random_trapezoid(Xoshiro256& rng) {
    TrapezoidTerm w;
    w.low = rng.uniform(-2.0, 0.0);
    w.high = rng.uniform(3.0, 6.0);
    w.rise = rng.uniform(1.0e-6, 3.0e-6);
    w.high_time = rng.uniform(2.0e-6, 6.0e-6);
    w.fall = rng.uniform(1.0e-6, 3.0e-6);
    w.period = w.rise + w.high_time + w.fall + rng.uniform(2.0e-6, 6.0e-6);
    return w;
}

}  // namespace

SimSuite generate_suite(const SuiteConfig& config) {
    config.circuit.validate();
    Xoshiro256 rng(config.seed);

    struct Recipe {
        const char* name;
        const char* description;
        bool dc, low, high, trap;
    };
    static constexpr Recipe training[] = {
        {"train_0", "dc + low-frequency sine", true, true, false, false},
        {"train_1", "dc + high-frequency sine", true, false, true, false},
        {"train_2", "trapezoid", false, false, false, true},
        {"train_3", "low-frequency sine + high-frequency sine", false, true, true, false},
        {"train_4", "dc + trapezoid + high-frequency sine", true, false, true, true},
        {"train_5", "low-frequency sine + trapezoid", false, true, false, true},
    };
    static constexpr Recipe test[] = {
        {"test_0", "dc + low-frequency sine + high-frequency sine", true, true, true, false},
    };

    auto build = [&](const Recipe& r) {
        SuiteEntry e;
        e.name = r.name;
        e.description = r.description;
        // Draw every term so each recipe consumes the same amount of randomness.
        const DcTerm dc = random_dc(rng);
        const SineTerm low = random_low_sine(rng);
        const SineTerm high = random_high_sine(rng);
        const TrapezoidTerm trap = random_trapezoid(rng);
        if (r.dc) e.source.terms.emplace_back(dc);
        if (r.low) e.source.terms.emplace_back(low);
        if (r.high) e.source.terms.emplace_back(high);
        if (r.trap) e.source.terms.emplace_back(trap);
        e.output = simulate(config.circuit, e.source, config.dt, config.samples);
        return e;
    };

    SimSuite suite;
    for (const Recipe& r : training) {
        suite.training.push_back(build(r));
    }
    for (const Recipe& r : test) {
        suite.test.push_back(build(r));
    }
    return suite;
}

TimeSeriesSet resample_equidistant(std::span<const double> times, const Tensor& values,
                                   std::vector<std::string> feature_names, double dt) {
    if (!(dt > 0.0)) {
        throw ValidationError("resample: dt must be positive");
    }
    if (times.size() < 2 || static_cast<Index>(times.size()) != values.rows()) {
        throw ValidationError("resample: need at least two time stamps matching the value rows");
    }
    for (std::size_t k = 1; k < times.size(); ++k) {
        if (!(times[k] > times[k - 1])) {
            throw ValidationError("resample: time stamps must be strictly increasing");
        }
    }
    const double t0 = times.front();
    const Index count = static_cast<Index>(std::floor((times.back() - t0) / dt * (1.0 + 1e-12))) + 1;
    TimeSeriesSet out;
    out.feature_names = std::move(feature_names);
    out.t0 = t0;
    out.dt = dt;
    out.values.resize(count, values.cols());
    std::size_t seg = 0;
    for (Index k = 0; k < count; ++k) {
        const double t = std::min(t0 + static_cast<double>(k) * dt, times.back());
        while (seg + 2 < times.size() && times[seg + 1] < t) {
            ++seg;
        }
        const double a = (t - times[seg]) / (times[seg + 1] - times[seg]);
        out.values.row(k) = (1.0 - a) * values.row(static_cast<Index>(seg)) + a * values.row(static_cast<Index>(seg) + 1);
    }
    out.validate();
    return out;
}

}  // namespace autorecon
