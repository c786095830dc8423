#include "monotrack/simverify.hpp"

#include <algorithm>
#include <cmath>

#include <unsupported/Eigen/MatrixFunctions>

#include "monotrack/errors.hpp"

namespace monotrack {

void RateSpec::validate() const
{
    const bool ok = domain == TimeDomain::Continuous ? (std::isfinite(rho) && rho < 0.0) : (rho > 0.0 && rho < 1.0);
    if (!ok)
        throw Error(ErrorCode::InvalidArgument,
                    "rate must be negative (continuous) or inside (0, 1) (discrete)");
}

const char* to_string(MonotoneStatus s)
{
    switch (s) {
    case MonotoneStatus::Monotone: return "monotone";
    case MonotoneStatus::NotMonotone: return "not_monotone";
    case MonotoneStatus::Instantaneous: return "instantaneous";
    }
    return "unknown";
}

double default_horizon(TimeDomain domain, double rho)
{
    if (domain == TimeDomain::Discrete) return 200.0;
    return 8.0 / std::abs(rho);
}

Index default_samples(TimeDomain domain)
{
    return domain == TimeDomain::Continuous ? 400 : 201;
}

SimulationTrace simulate(const LtiSystem& sys, const FeedbackResult& fb, const Vector& x0, double horizon,
                         Index num_samples)
{
    if (x0.size() != sys.n()) throw Error(ErrorCode::DimensionMismatch, "initial state length must equal n");
    if (num_samples < 2) throw Error(ErrorCode::InvalidArgument, "at least two samples required");
    const Matrix Acl = sys.A() + sys.B() * fb.F;
    const Matrix Ccl = sys.C() + sys.D() * fb.F;
    for (const Complex& z : eigenvalues(Acl))
        if (!in_stability_region(z, sys.domain()))
            throw Error(ErrorCode::UnstableClosedLoop, "A+BF has an eigenvalue outside the stability region");

    SimulationTrace tr;
    tr.domain = sys.domain();
    tr.x0 = x0;
    tr.modes = fb.assigned_modes;
    tr.xi.resize(sys.n(), num_samples);
    tr.times.resize(static_cast<std::size_t>(num_samples));

    Matrix step;
    double dt = 1.0;
    if (sys.domain() == TimeDomain::Continuous) {
        if (!(horizon > 0.0) || !std::isfinite(horizon)) throw Error(ErrorCode::InvalidArgument, "horizon must be positive");
        dt = horizon / static_cast<double>(num_samples - 1);
        step = (Acl * dt).exp();
    } else {
        step = Acl;
    }
    tr.xi.col(0) = x0 - fb.x_ss;
    tr.times[0] = 0.0;
    for (Index t = 1; t < num_samples; ++t) {
        tr.xi.col(t) = step * tr.xi.col(t - 1);
        tr.times[static_cast<std::size_t>(t)] = static_cast<double>(t) * dt;
    }
    tr.epsilon = Ccl * tr.xi;
    // Reference recovered from the steady state: y_ss = C x_ss + D u_ss.
    tr.reference = sys.C() * fb.x_ss + sys.D() * fb.u_ss;
    return tr;
}

std::vector<MonotoneStatus> check_monotonic(const SimulationTrace& trace, double tol, double absolute_floor)
{
    std::vector<MonotoneStatus> out;
    for (Index k = 0; k < trace.epsilon.rows(); ++k) {
        const Eigen::RowVectorXd e = trace.epsilon.row(k);
        const double peak = e.cwiseAbs().maxCoeff();
        if (peak <= absolute_floor) {
            out.push_back(MonotoneStatus::Instantaneous);
            continue;
        }
        const double tie = tol * peak;
        int sign = 0;
        bool ok = true;
        for (Index t = 0; t + 1 < e.size() && ok; ++t) {
            const double d = e(t + 1) - e(t);
            if (std::abs(e(t + 1)) > std::abs(e(t)) + tie) ok = false;
            if (std::abs(d) <= tie) continue;
            const int s = d > 0.0 ? 1 : -1;
            if (sign == 0) sign = s;
            else if (s != sign) ok = false;
        }
        out.push_back(ok ? MonotoneStatus::Monotone : MonotoneStatus::NotMonotone);
    }
    return out;
}

std::vector<bool> check_rate(const SimulationTrace& trace, const RateSpec& rate, double tol, double absolute_floor)
{
    rate.validate();
    std::vector<bool> out;
    for (Index k = 0; k < trace.epsilon.rows(); ++k) {
        const double beta = std::abs(trace.epsilon(k, 0)) * (1.0 + tol);
        bool ok = true;
        for (Index t = 0; t < trace.epsilon.cols() && ok; ++t) {
            const double time = trace.times[static_cast<std::size_t>(t)];
            const double env = rate.domain == TimeDomain::Continuous ? beta * std::exp(rate.rho * time)
                                                                     : beta * std::pow(rate.rho, time);
            if (std::abs(trace.epsilon(k, t)) > env + absolute_floor) ok = false;
        }
        out.push_back(ok);
    }
    return out;
}

std::vector<ModeFit> fit_single_mode(const SimulationTrace& trace, double absolute_floor)
{
    const Index T = trace.epsilon.cols();
    if (T < 8) throw Error(ErrorCode::InsufficientData, "mode fitting needs at least 8 samples");
    std::vector<ModeFit> out;
    for (Index k = 0; k < trace.epsilon.rows(); ++k) {
        const Eigen::RowVectorXd e = trace.epsilon.row(k);
        ModeFit fit;
        const double peak = e.cwiseAbs().maxCoeff();
        if (peak <= absolute_floor) {
            fit.instantaneous = true;
            out.push_back(fit);
            continue;
        }
        const double cut = std::max(absolute_floor, 1e-10 * peak);
        double s0 = 0, s1 = 0, s2 = 0, y0 = 0, y1 = 0;
        int sign = 0;
        bool sign_change = false;
        Index used = 0;
        Index peak_at = 0;
        for (Index t = 0; t < T; ++t) {
            if (std::abs(e(t)) > std::abs(e(peak_at))) peak_at = t;
            if (std::abs(e(t)) <= cut) continue;
            const int s = e(t) > 0.0 ? 1 : -1;
            if (sign == 0) sign = s;
            else if (s != sign) sign_change = true;
            const double w = e(t) * e(t);
            const double x = trace.times[static_cast<std::size_t>(t)];
            const double y = std::log(std::abs(e(t)));
            s0 += w;
            s1 += w * x;
            s2 += w * x * x;
            y0 += w * y;
            y1 += w * x * y;
            ++used;
        }
        const double det = s0 * s2 - s1 * s1;
        if (used < 2 || det <= 0.0) {
            fit.relative_residual = 1.0;
            out.push_back(fit);
            continue;
        }
        const double slope = (s0 * y1 - s1 * y0) / det;
        const double intercept = (y0 - slope * s1) / s0;
        fit.coefficient = (e(peak_at) > 0.0 ? 1.0 : -1.0) * std::exp(intercept);
        fit.mode = trace.domain == TimeDomain::Continuous ? slope : std::exp(slope);
        double sq = 0.0;
        for (Index t = 0; t < T; ++t) {
            const double model = fit.coefficient * std::exp(slope * trace.times[static_cast<std::size_t>(t)]);
            sq += (e(t) - model) * (e(t) - model);
        }
        fit.relative_residual = sign_change ? 1.0 : std::sqrt(sq / static_cast<double>(T)) / peak;
        out.push_back(fit);
    }
    return out;
}

bool OutputReport::passes(double fit_tol) const
{
    if (monotone == MonotoneStatus::NotMonotone || !rate_ok || !mode_matches) return false;
    return fit.instantaneous || fit.relative_residual <= fit_tol;
}

bool TraceReport::passes(double fit_tol) const
{
    return std::all_of(outputs.begin(), outputs.end(), [&](const OutputReport& o) { return o.passes(fit_tol); });
}

TraceReport verify_trace(const SimulationTrace& trace, const RateSpec& rate, double tol, double mode_tol,
                         double absolute_floor)
{
    const auto mono = check_monotonic(trace, tol, absolute_floor);
    const auto rates = check_rate(trace, rate, tol, absolute_floor);
    const auto fits = fit_single_mode(trace, absolute_floor);
    TraceReport rep;
    for (std::size_t k = 0; k < mono.size(); ++k) {
        OutputReport o;
        if (k < trace.modes.size()) o.assigned_mode = trace.modes[k];
        o.monotone = mono[k];
        o.rate_ok = rates[k];
        o.fit = fits[k];
        if (o.fit.instantaneous) o.mode_matches = true;
        else if (o.assigned_mode)
            o.mode_matches = std::abs(o.fit.mode - *o.assigned_mode) <= mode_tol * std::max(1.0, std::abs(*o.assigned_mode));
        rep.outputs.push_back(o);
    }
    return rep;
}

}  // namespace monotrack
