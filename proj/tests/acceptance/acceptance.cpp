// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
#include <chrono>
#include <cstdio>
#include <functional>
#include <limits>
#include <sstream>
#include <string>

#include "support.hpp"

using namespace monotrack;
using namespace testsupport;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

SynthesisSpec base_spec(std::uint64_t seed = 1)
{
    SynthesisSpec spec;
    spec.lambdas = {-1, -2, -1};
    spec.reference = vec({2, 2, 2});
    spec.seed = seed;
    return spec;
}

std::vector<double> pool_for(const LtiSystem& sys)
{
    return default_pool(sys.domain(), static_cast<std::size_t>(sys.n() + 2), invariant_zeros(sys));
}

Outcome zeros_criterion(const LtiSystem& sys)
{
    const auto t0 = Clock::now();
    auto zs = invariant_zeros(sys);
    const double elapsed = seconds_since(t0);
    std::vector<double> re;
    double imag = 0.0;
    for (const auto& z : zs) {
        re.push_back(z.value.real());
        imag = std::max(imag, std::abs(z.value.imag()));
    }
    std::sort(re.begin(), re.end());
    const std::vector<double> want{-6, 2, 3, 5};
    double dev = re.size() == want.size() ? imag : 1e300;
    if (re.size() == want.size())
        for (std::size_t i = 0; i < want.size(); ++i) dev = std::max(dev, std::abs(re[i] - want[i]));
    const Index kdim = nullspace(rosenbrock(sys, -6.0)).dim();
    return {dev <= 1e-6 && kdim == 2 && elapsed < 1.0,
            "max deviation " + fmt(dev) + ", kernel dim at -6 = " + std::to_string(kdim) + ", " + fmt(elapsed) + " s"};
}

Outcome subspace_criterion(const LtiSystem& sys)
{
    auto pool = pool_for(sys);
    PairedBasis vg = vstar_g(sys, pool);
    const double res = two_sided_residual(vg.V, published_vg());
    PairedBasis r1 = rstar(sys, Index{0}, pool);
    PairedBasis r2 = rstar(sys, Index{1}, pool);
    PairedBasis r3 = rstar(sys, Index{2}, pool);
    const double s1 = two_sided_residual(r1.V, unit_span(5, {1, 2, 3, 4}));
    const double s2 = two_sided_residual(r2.V, unit_span(5, {2, 3, 4}));
    const double s3 = two_sided_residual(r3.V, unit_span(5, {1, 2, 3, 4}));
    const bool ok = vg.dim() == 2 && res <= 1e-8 && r1.dim() == 4 && r2.dim() == 3 && r3.dim() == 4 && s1 <= 1e-8 &&
                    s2 <= 1e-8 && s3 <= 1e-8;
    return {ok, "dim V*g " + std::to_string(vg.dim()) + " (residual " + fmt(res) + "), dims R*_j " +
                    std::to_string(r1.dim()) + "/" + std::to_string(r2.dim()) + "/" + std::to_string(r3.dim()) +
                    ", max span residual " + fmt(std::max({s1, s2, s3}))};
}

Outcome subset_criterion(const LtiSystem& sys)
{
    auto pool = pool_for(sys);
    Basis vg = vstar_g(sys, pool).basis();
    auto rj = rstar_j_all(sys, pool);
    const Index d1 = subspace_sum_dim({vg, rj[0]});
    const Index d2 = subspace_sum_dim({vg, rj[1]});
    const Index d23 = subspace_sum_dim({vg, rj[1], rj[2]});
    SolvabilityVerdict v = check_lambda_free(sys, vg, rj);
    return {d1 == 5 && d2 == 4 && d23 == 5 && v.solvable,
            "dims " + std::to_string(d1) + ", " + std::to_string(d2) + ", " + std::to_string(d23) +
                ", failing subsets " + std::to_string(v.failing_count)};
}

Outcome replay_criterion(const LtiSystem& sys)
{
    SynthesisSpec spec = base_spec();
    spec.replay = five_state_replay(sys);
    FeedbackResult fb = synthesize(sys, spec);
    const double dev = (fb.F - published_gain()).cwiseAbs().maxCoeff();
    // Spot entries against the rationals evaluated in double precision.
    const double q1 = 68419.0 / 8250.0, q2 = -5351.0 / 2475.0, q3 = 4.0 / 9.0;
    auto close = [](double a, double b) { return std::abs(a - b) <= 4 * std::numeric_limits<double>::epsilon() * std::abs(b); };
    const bool spots = close(fb.F(0, 0), q1) && close(fb.F(1, 0), q2) && close(fb.F(3, 0), q3);
    return {dev <= 1e-9 && spots, "max entry deviation " + fmt(dev) + ", spot entries " +
                                      (spots ? "exact to rounding" : "differ: " + fmt(fb.F(0, 0) - q1) + " " +
                                                                         fmt(fb.F(1, 0) - q2) + " " +
                                                                         fmt(fb.F(3, 0) - q3))};
}

Outcome spectrum_criterion(const LtiSystem& sys)
{
    const auto target = reals({-1, -1, -2, -6, -6});
    int good = 0;
    std::string bad;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        try {
            FeedbackResult fb = synthesize(sys, base_spec(seed));
            if (spectra_match(eigenvalues(sys.A() + sys.B() * fb.F), target, 1e-6)) ++good;
            else bad += " " + std::to_string(seed);
        } catch (const Error& e) {
            bad += " " + std::to_string(seed) + "(" + to_string(e.code()) + ")";
        }
    }
    return {good == 20, std::to_string(good) + "/20 seeds match" + (bad.empty() ? "" : "; failing:" + bad)};
}

Outcome steady_state_criterion(const LtiSystem& sys)
{
    const Vector r = vec({2, 2, 2});
    const double pub = steady_state_residual(sys, r, published_xss(), published_uss());
    const double pub_oracle = oracle_equilibrium_residual(sys, r, published_xss(), published_uss());
    auto [x, u] = steady_state(sys, r);
    const double ours = steady_state_residual(sys, r, x, u);
    const double ours_oracle = oracle_equilibrium_residual(sys, r, x, u);
    return {std::max(pub, pub_oracle) <= 1e-12 && std::max(ours, ours_oracle) <= 1e-9,
            "published pair residual " + fmt(std::max(pub, pub_oracle)) + ", computed pair residual " +
                fmt(std::max(ours, ours_oracle))};
}

Outcome simulation_criterion(const LtiSystem& sys)
{
    FeedbackResult fb = synthesize(sys, base_spec());
    const double l[3] = {-1, -2, -1};
    bool ok = true;
    double worst_fit = 0.0, worst_mode = 0.0;
    for (const Vector& x0 : {vec({0.1, -0.2, 0.1, 0.1, 0}), vec({0.6, 0.2, 0.2, -0.2, 1})}) {
        SimulationTrace tr = simulate(sys, fb, x0, default_horizon(sys.domain(), -1.0), default_samples(sys.domain()));
        TraceReport rep = verify_trace(tr, RateSpec{-1.0});
        for (int k = 0; k < 3; ++k) {
            const auto& o = rep.outputs[static_cast<std::size_t>(k)];
            ok = ok && o.monotone == MonotoneStatus::Monotone && o.rate_ok && !o.fit.instantaneous;
            worst_fit = std::max(worst_fit, o.fit.relative_residual);
            worst_mode = std::max(worst_mode, std::abs(o.fit.mode - l[k]));
        }
    }
    ok = ok && worst_fit <= 1e-6 && worst_mode <= 1e-6;
    return {ok, "worst fit residual " + fmt(worst_fit) + ", worst mode error " + fmt(worst_mode)};
}

Outcome oracle_criterion()
{
    Rng rng(2024, 8);
    int agree = 0;
    double worst = 0.0;
    std::string bad;
    for (int trial = 0; trial < 50; ++trial) {
        const Index n = 2 + static_cast<Index>(rng.uniform() * 7);
        const Index p = 1 + static_cast<Index>(rng.uniform() * std::min<Index>(3, n - 1));
        const Index m = p + static_cast<Index>(rng.uniform() * std::min<Index>(3, n - p + 1));
        LtiSystem sys = random_plant(rng, n, m, p, trial % 3 == 0 ? 1 : 0);
        try {
            PairedBasis r = rstar(sys, std::nullopt, pool_for(sys));
            Basis o = rstar_recursive(sys);
            double res = 0.0;
            if (r.dim() > 0 || o.dim() > 0) res = r.dim() && o.dim() ? two_sided_residual(r.V, o.columns) : 1.0;
            worst = std::max(worst, res);
            if (r.dim() == o.dim() && res <= 1e-8) ++agree;
            else bad += " " + std::to_string(trial);
        } catch (const Error& e) {
            bad += " " + std::to_string(trial) + "(" + to_string(e.code()) + ")";
        }
    }
    return {agree == 50, std::to_string(agree) + "/50 systems agree, worst residual " + fmt(worst) +
                             (bad.empty() ? "" : "; failing:" + bad)};
}

Outcome genericity_criterion(const LtiSystem& sys)
{
    GenericityStats st = genericity_trial(sys, {-1, -2, -1}, 100);
    int gains = 0, runs_ok = 0, runs = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        FeedbackResult fb;
        try {
            fb = synthesize(sys, base_spec(seed));
        } catch (const Error&) {
            continue;
        }
        ++gains;
        Rng rng(seed, 900);
        for (int k = 0; k < 20; ++k) {
            Vector x0 = random_matrix(rng, 5, 1);
            SimulationTrace tr = simulate(sys, fb, x0, 8.0, 400);
            TraceReport rep = verify_trace(tr, RateSpec{-1.0});
            bool ok = true;
            for (const auto& o : rep.outputs)
                ok = ok && o.monotone != MonotoneStatus::NotMonotone && o.mode_matches &&
                     (o.fit.instantaneous || o.fit.relative_residual <= 1e-6);
            ++runs;
            runs_ok += ok;
        }
    }
    const bool pass = st.trials == 100 && st.rank_deficiency_events() == 0 && gains == 100 && runs_ok == runs;
    return {pass, std::to_string(st.rank_deficiency_events()) + " rank-deficiency events in " +
                      std::to_string(st.trials) + " draws, " + std::to_string(gains) + " gains, " +
                      std::to_string(runs_ok) + "/" + std::to_string(runs) + " trajectories monotone single-mode"};
}

Outcome invariants_criterion(const LtiSystem& sys)
{
    FeedbackResult fb = synthesize(sys, base_spec());
    Rng rng(10, 10);
    double sup = 0.0, vis = 0.0;
    for (int k = 0; k < 10; ++k) {
        Vector a = random_matrix(rng, 5, 1);
        Vector b = random_matrix(rng, 5, 1);
        const double s = rng.uniform(-2, 2), t = rng.uniform(-2, 2);
        Matrix ea = simulate(sys, fb, a + fb.x_ss, 8.0, 200).epsilon;
        Matrix eb = simulate(sys, fb, b + fb.x_ss, 8.0, 200).epsilon;
        Matrix ec = simulate(sys, fb, s * a + t * b + fb.x_ss, 8.0, 200).epsilon;
        sup = std::max(sup, (ec - (s * ea + t * eb)).cwiseAbs().maxCoeff());
        Vector xi0 = fb.vstar_g.V * random_matrix(rng, fb.vstar_g.dim(), 1);
        vis = std::max(vis, simulate(sys, fb, xi0 + fb.x_ss, 8.0, 200).epsilon.cwiseAbs().maxCoeff());
    }
    return {sup <= 1e-9 && vis <= 1e-9, "superposition error " + fmt(sup) + ", V*g output " + fmt(vis)};
}

}  // namespace

int main()
{
    const auto start = Clock::now();
    const LtiSystem sys = five_state();
    const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
        {1, [&] { return zeros_criterion(sys); }},
        {2, [&] { return subspace_criterion(sys); }},
        {3, [&] { return subset_criterion(sys); }},
        {4, [&] { return replay_criterion(sys); }},
        {5, [&] { return spectrum_criterion(sys); }},
        {6, [&] { return steady_state_criterion(sys); }},
        {7, [&] { return simulation_criterion(sys); }},
        {8, [] { return oracle_criterion(); }},
        {9, [&] { return genericity_criterion(sys); }},
        {10, [&] { return invariants_criterion(sys); }},
    };
    int failures = 0;
    for (const auto& [id, run] : criteria) {
        const auto t0 = Clock::now();
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += !o.pass;
        std::printf("criterion %d: %s (%s; %.2f s)\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str(), seconds_since(t0));
        std::fflush(stdout);
    }
    const double total = seconds_since(start);
    std::printf("total runtime %.2f s (%s 60 s target)\n", total, total < 60.0 ? "within" : "over");
    return failures == 0 ? 0 : 1;
}
