#pragma once

#include <optional>
#include <vector>

#include "monotrack/synthesis.hpp"

namespace monotrack {

struct SimulationTrace {
    std::vector<double> times;
    Matrix xi;       // n x T error-state samples
    Matrix epsilon;  // p x T tracking-error samples
    Vector x0;
    Vector reference;
    std::vector<std::optional<double>> modes;
    TimeDomain domain = TimeDomain::Continuous;
};

struct RateSpec {
    double rho = -1.0;
    TimeDomain domain = TimeDomain::Continuous;

    void validate() const;
};

enum class MonotoneStatus { Monotone, NotMonotone, Instantaneous };

const char* to_string(MonotoneStatus s);

struct ModeFit {
    bool instantaneous = false;
    double mode = 0.0;
    double coefficient = 0.0;
    double relative_residual = 0.0;
};

double default_horizon(TimeDomain domain, double rho);
Index default_samples(TimeDomain domain);

// Continuous: horizon in seconds, num_samples uniform samples on [0, horizon].
// Discrete: horizon is ignored and num_samples consecutive steps are returned.
SimulationTrace simulate(const LtiSystem& sys, const FeedbackResult& fb, const Vector& x0, double horizon,
                         Index num_samples);

std::vector<MonotoneStatus> check_monotonic(const SimulationTrace& trace, double tol = 1e-9,
                                            double absolute_floor = 1e-12);

std::vector<bool> check_rate(const SimulationTrace& trace, const RateSpec& rate, double tol = 1e-9,
                             double absolute_floor = 1e-12);

std::vector<ModeFit> fit_single_mode(const SimulationTrace& trace, double absolute_floor = 1e-12);

struct OutputReport {
    std::optional<double> assigned_mode;
    MonotoneStatus monotone = MonotoneStatus::Instantaneous;
    bool rate_ok = false;
    ModeFit fit;
    // Fitted mode equals the assigned one (or the output is instantaneous).
    bool mode_matches = false;

    bool passes(double fit_tol) const;
};

struct TraceReport {
    std::vector<OutputReport> outputs;
    bool passes(double fit_tol = 1e-6) const;
};

// Monotonicity, rate and single-mode checks on one trace. Strict monotonicity
// is certified as non-strict monotonicity plus a single nonzero mode.
TraceReport verify_trace(const SimulationTrace& trace, const RateSpec& rate, double tol = 1e-9,
                         double mode_tol = 1e-6, double absolute_floor = 1e-12);

}  // namespace monotrack
