#include "monotrack/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "monotrack/errors.hpp"

namespace monotrack {

namespace {

constexpr std::uint64_t kStreamDirection = 400;
constexpr std::uint64_t kStreamFinalDirections = 500;

void check_mode(const LtiSystem& sys, Index j, double lambda, const SubspaceOptions& opts)
{
    if (j < 0 || j >= sys.p()) throw Error(ErrorCode::InvalidArgument, "output index out of range");
    if (!std::isfinite(lambda) || !in_stability_region(lambda, sys.domain()))
        throw Error(ErrorCode::UnstableLambda, "mode " + std::to_string(lambda) + " is not in the stability region");
    if (near_zero(lambda, invariant_zeros(sys, opts.zeros), opts.exclusion_radius))
        throw Error(ErrorCode::LambdaAtZero, "mode " + std::to_string(lambda) + " coincides with an invariant zero");
}

double output_of(const LtiSystem& sys, Index j, const Vector& v, const Vector& w)
{
    return sys.C().row(j).dot(v) + sys.D().row(j).dot(w);
}

Index full_rank_of(const Matrix& V, const TolerancePolicy& tol)
{
    Matrix scaled = V;
    for (Index c = 0; c < scaled.cols(); ++c) {
        const double nv = scaled.col(c).norm();
        if (nv > 0.0) scaled.col(c) /= nv;
    }
    return rank_of(scaled, tol.structural());
}

}  // namespace

DirectionPair random_direction(const LtiSystem& sys, Index j, double lambda, Rng& rng, const SubspaceOptions& opts)
{
    const PairedBasis kb = rstar_at(sys, lambda, j, opts);
    DirectionPair d;
    d.output_index = j;
    d.mode = lambda;
    if (kb.dim() == 0) {
        d.v = Vector::Zero(sys.n());
        d.w = Vector::Zero(sys.m());
        return d;
    }
    Vector k(kb.dim());
    for (Index i = 0; i < k.size(); ++i) k(i) = opts.mixing ? opts.mixing(rng) : rng.uniform(-1.0, 1.0);
    d.v = kb.V * k;
    d.w = kb.W * k;
    d.beta = output_of(sys, j, d.v, d.w);
    return d;
}

DirectionPair direction_for_output(const LtiSystem& sys, Index j, double lambda, const DirectionOptions& opts)
{
    check_mode(sys, j, lambda, opts.subspace);
    const Index n = sys.n();
    Vector rhs = Vector::Zero(n + sys.p());
    rhs(n + j) = 1.0;
    const Vector x = min_norm_solve(rosenbrock(sys, lambda), rhs, opts.subspace.tol);
    DirectionPair d{x.head(n), x.tail(sys.m()), 0.0, j, lambda};
    d.beta = output_of(sys, j, d.v, d.w);
    const double floor = opts.subspace.tol.absolute_floor;
    if (std::abs(d.beta) > floor) return d;

    Rng rng(opts.seed, kStreamDirection + static_cast<std::uint64_t>(j));
    for (int attempt = 0; attempt < opts.max_retries; ++attempt) {
        DirectionPair r = random_direction(sys, j, lambda, rng, opts.subspace);
        if (std::abs(r.beta) > floor) return r;
    }
    throw Error(ErrorCode::DegenerateDirection,
                "no direction with a nonzero output " + std::to_string(j + 1) + " after retries");
}

std::pair<Vector, Vector> steady_state(const LtiSystem& sys, const Vector& r, const TolerancePolicy& tol)
{
    if (r.size() != sys.p()) throw Error(ErrorCode::DimensionMismatch, "reference length must equal p");
    if (!r.allFinite()) throw Error(ErrorCode::InvalidArgument, "reference must be finite");
    const Index n = sys.n();
    Vector rhs = Vector::Zero(n + sys.p());
    rhs.tail(sys.p()) = r;
    const Vector x = min_norm_solve(rosenbrock(sys, tracking_frequency(sys.domain())), rhs, tol);
    return {x.head(n), x.tail(sys.m())};
}

double steady_state_residual(const LtiSystem& sys, const Vector& r, const Vector& x, const Vector& u)
{
    const double f = tracking_frequency(sys.domain());
    const double state = (sys.A() * x - f * x + sys.B() * u).norm();
    const double output = (sys.C() * x + sys.D() * u - r).norm();
    return std::max(state, output);
}

std::vector<Complex> eigenvalues(const Matrix& M)
{
    Eigen::EigenSolver<Matrix> es(M, false);
    std::vector<Complex> out;
    for (Index i = 0; i < es.eigenvalues().size(); ++i) out.push_back(es.eigenvalues()(i));
    return out;
}

bool spectra_match(std::vector<Complex> a, std::vector<Complex> b, double tol)
{
    if (a.size() != b.size()) return false;
    auto by_parts = [](Complex x, Complex y) {
        if (x.real() != y.real()) return x.real() < y.real();
        return x.imag() < y.imag();
    };
    std::sort(a.begin(), a.end(), by_parts);
    std::vector<bool> used(b.size(), false);
    for (const Complex& x : a) {
        std::size_t best = b.size();
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < b.size(); ++k) {
            if (used[k]) continue;
            const double d = std::abs(x - b[k]);
            if (d < best_d) {
                best_d = d;
                best = k;
            }
        }
        if (best == b.size() || best_d > tol * std::max(1.0, std::abs(x))) return false;
        used[best] = true;
    }
    return true;
}

std::vector<Complex> expected_spectrum(const FeedbackResult& fb)
{
    std::vector<Complex> out;
    for (const auto& d : fb.directions) out.emplace_back(d.mode, 0.0);
    for (const Complex& z : fb.vstar_g.spectrum()) out.push_back(z);
    return out;
}

Vector control_input(const FeedbackResult& fb, const Vector& x)
{
    if (x.size() != fb.F.cols()) throw Error(ErrorCode::DimensionMismatch, "state length must equal n");
    return fb.F * (x - fb.x_ss) + fb.u_ss;
}

namespace {

void check_result(const LtiSystem& sys, const FeedbackResult& fb, const TolerancePolicy& tol)
{
    const Matrix Acl = sys.A() + sys.B() * fb.F;
    const Matrix Ccl = sys.C() + sys.D() * fb.F;
    const double scale_a = std::max(1.0, Acl.norm());
    const double scale_c = std::max(1.0, Ccl.norm());
    const double rel = std::max(tol.residual_tol, 1e-8);

    const double fv = (fb.F * fb.V - fb.W).norm();
    if (fv > tol.residual_tol * (fb.F.norm() * fb.V.norm() + fb.W.norm()))
        throw Error(ErrorCode::UnstableResult, "F V differs from W");

    for (std::size_t i = 0; i < fb.directions.size(); ++i) {
        const auto& d = fb.directions[i];
        const double vn = d.v.norm();
        if ((Acl * d.v - d.mode * d.v).norm() > rel * scale_a * vn)
            throw Error(ErrorCode::UnstableResult, "direction for output " + std::to_string(d.output_index + 1) +
                                                       " is not an eigenvector of A+BF");
        Vector target = Vector::Zero(sys.p());
        target(d.output_index) = d.beta;
        if ((Ccl * d.v - target).norm() > rel * scale_c * vn)
            throw Error(ErrorCode::UnstableResult, "direction output is not beta e_j");
    }
    const Matrix& Vg = fb.vstar_g.V;
    if (Vg.cols() > 0 && (Ccl * Vg).norm() > rel * scale_c * Vg.norm())
        throw Error(ErrorCode::UnstableResult, "V*g columns are not output nulling");

    for (const Complex& z : fb.closed_loop_spectrum)
        if (!in_stability_region(z, sys.domain()))
            throw Error(ErrorCode::UnstableResult, "closed-loop eigenvalue outside the stability region");
    if (!spectra_match(fb.closed_loop_spectrum, expected_spectrum(fb), 1e-6))
        throw Error(ErrorCode::UnstableResult, "closed-loop spectrum differs from the assigned modes");
}

}  // namespace

FeedbackResult synthesize(const LtiSystem& sys, const SynthesisSpec& spec)
{
    SubspaceOptions so = spec.subspace;
    so.seed = spec.seed;
    so.max_retries = spec.max_retries;
    so.tol.validate();

    const AssumptionReport audit = audit_assumptions(sys, so.zeros);
    if (!audit.all_pass()) {
        std::string msg = "standing assumptions fail:";
        for (const auto& d : audit.details) msg += " " + d + ";";
        throw Error(ErrorCode::AssumptionViolated, msg);
    }
    if (spec.reference.size() != sys.p()) throw Error(ErrorCode::DimensionMismatch, "reference length must equal p");
    validate_lambdas(sys, spec.lambdas, so);

    const auto zeros = invariant_zeros(sys, so.zeros);
    const std::vector<double> pool =
        spec.free_pool.empty() ? default_pool(sys.domain(), static_cast<std::size_t>(sys.n() + 2), zeros,
                                              so.exclusion_radius)
                               : spec.free_pool;

    const bool replay_vg = spec.replay && spec.replay->vstar_g;
    PairedBasis vg;
    if (replay_vg) {
        vg = *spec.replay->vstar_g;
        if (vg.V.rows() != sys.n() || vg.W.rows() != sys.m() || vg.W.cols() != vg.V.cols() ||
            static_cast<Index>(vg.modes.size()) != vg.V.cols())
            throw Error(ErrorCode::DimensionMismatch, "replay V*g basis has inconsistent shape");
        if (paired_residual(sys, vg) > so.tol.residual_tol)
            throw Error(ErrorCode::InvalidArgument, "replay V*g basis violates the pencil relations");
    } else {
        vg = vstar_g(sys, pool, so);
    }

    FeedbackResult fb;
    fb.verdict = check_generalized(sys, vg.basis(), spec.lambdas, rstar_j_at(sys, spec.lambdas, so), so);
    if (!fb.verdict.solvable) {
        std::string msg = "dimension conditions fail for the requested modes";
        if (!fb.verdict.failing_subsets.empty()) {
            msg += "; first failing subset {";
            const auto& fs = fb.verdict.failing_subsets.front();
            for (std::size_t i = 0; i < fs.subset.size(); ++i)
                msg += (i ? "," : "") + std::to_string(fs.subset[i] + 1);
            msg += "} reaches " + std::to_string(fs.achieved) + " of " + std::to_string(fs.required);
        }
        throw Error(ErrorCode::NotSolvable, msg);
    }
    fb.delta = *fb.verdict.delta;

    DirectionOptions dopt{spec.seed, spec.max_retries, so};
    std::vector<DirectionPair> dirs;
    for (Index j : fb.delta) {
        const double lambda = spec.lambdas[static_cast<std::size_t>(j)];
        const DirectionPair* given = nullptr;
        if (spec.replay)
            for (const auto& d : spec.replay->directions)
                if (d.output_index == j) given = &d;
        if (given) {
            DirectionPair d = *given;
            d.mode = lambda;
            d.beta = output_of(sys, j, d.v, d.w);
            dirs.push_back(d);
        } else {
            dirs.push_back(direction_for_output(sys, j, lambda, dopt));
        }
    }

    auto assemble = [&](const std::vector<DirectionPair>& ds, const PairedBasis& g) {
        Matrix V(sys.n(), static_cast<Index>(ds.size()) + g.dim());
        Matrix W(sys.m(), V.cols());
        for (std::size_t i = 0; i < ds.size(); ++i) {
            V.col(static_cast<Index>(i)) = ds[i].v;
            W.col(static_cast<Index>(i)) = ds[i].w;
        }
        V.rightCols(g.dim()) = g.V;
        W.rightCols(g.dim()) = g.W;
        return std::pair<Matrix, Matrix>(V, W);
    };

    auto [V, W] = assemble(dirs, vg);
    if (V.cols() != sys.n()) throw Error(ErrorCode::NotSolvable, "direction count does not complete the state space");
    bool full = full_rank_of(V, so.tol) == sys.n();
    for (int attempt = 1; !full && !replay_vg && attempt <= spec.max_retries; ++attempt) {
        SubspaceOptions redo = so;
        redo.seed = spec.seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(attempt);
        vg = vstar_g(sys, pool, redo);
        std::tie(V, W) = assemble(dirs, vg);
        full = full_rank_of(V, so.tol) == sys.n();
    }
    if (!full) {
        Rng rng(spec.seed, kStreamFinalDirections);
        std::vector<DirectionPair> redrawn;
        for (std::size_t i = 0; i < fb.delta.size(); ++i) {
            const Index j = fb.delta[i];
            DirectionPair d = random_direction(sys, j, spec.lambdas[static_cast<std::size_t>(j)], rng, so);
            if (std::abs(d.beta) <= so.tol.absolute_floor) break;
            redrawn.push_back(d);
        }
        if (redrawn.size() == fb.delta.size()) {
            auto [V2, W2] = assemble(redrawn, vg);
            if (full_rank_of(V2, so.tol) == sys.n()) {
                dirs = redrawn;
                V = V2;
                W = W2;
                full = true;
            }
        }
    }
    if (!full) throw Error(ErrorCode::RankDeficientAfterRetries, "[directions | V*g] stayed singular after retries");

    fb.V = V;
    fb.W = W;
    fb.F = V.transpose().fullPivLu().solve(W.transpose()).transpose();
    fb.directions = dirs;
    fb.vstar_g = vg;
    std::tie(fb.x_ss, fb.u_ss) = steady_state(sys, spec.reference, so.tol);
    fb.closed_loop_spectrum = eigenvalues(sys.A() + sys.B() * fb.F);
    fb.assigned_modes.assign(static_cast<std::size_t>(sys.p()), std::nullopt);
    for (Index j : fb.delta) fb.assigned_modes[static_cast<std::size_t>(j)] = spec.lambdas[static_cast<std::size_t>(j)];
    check_result(sys, fb, so.tol);
    return fb;
}

}  // namespace monotrack
