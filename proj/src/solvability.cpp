#include "monotrack/solvability.hpp"

#include <algorithm>
#include <cmath>

#include "monotrack/errors.hpp"

namespace monotrack {

namespace {

void guard_outputs(const LtiSystem& sys)
{
    if (sys.p() > kMaxOutputs)
        throw Error(ErrorCode::TooManyOutputs, "subset enumeration is limited to " + std::to_string(kMaxOutputs) +
                                                   " outputs");
}

// Calls f on every subset of idx, by cardinality and then lexicographically.
template <typename F>
void for_each_subset(const std::vector<Index>& idx, Index min_card, F&& f)
{
    const Index q = static_cast<Index>(idx.size());
    for (Index k = std::max<Index>(min_card, 0); k <= q; ++k) {
        std::vector<Index> pos(static_cast<std::size_t>(k));
        for (Index i = 0; i < k; ++i) pos[static_cast<std::size_t>(i)] = i;
        while (true) {
            std::vector<Index> subset;
            for (Index i : pos) subset.push_back(idx[static_cast<std::size_t>(i)]);
            f(subset);
            Index i = k - 1;
            while (i >= 0 && pos[static_cast<std::size_t>(i)] == q - k + i) --i;
            if (i < 0) break;
            ++pos[static_cast<std::size_t>(i)];
            for (Index t = i + 1; t < k; ++t) pos[static_cast<std::size_t>(t)] = pos[static_cast<std::size_t>(t - 1)] + 1;
        }
    }
}

struct FamilyResult {
    std::vector<FailingSubset> failures;
    std::size_t count = 0;
};

// Checks dim(Vg + sum_{j in S} R_j) >= base + |S| for every S within idx with
// |S| >= min_card.
FamilyResult check_family(const Basis& vg, const std::vector<Basis>& rj, const std::vector<Index>& idx, Index base,
                          Index min_card, const TolerancePolicy& tol, bool stop_early)
{
    FamilyResult out;
    bool stopped = false;
    for_each_subset(idx, min_card, [&](const std::vector<Index>& subset) {
        if (stopped) return;
        std::vector<Basis> parts{vg};
        for (Index j : subset) parts.push_back(rj[static_cast<std::size_t>(j)]);
        const Index achieved = subspace_sum_dim(parts, tol);
        const Index required = base + static_cast<Index>(subset.size());
        if (achieved < required) {
            ++out.count;
            if (out.failures.size() < SolvabilityVerdict::max_reported_failures)
                out.failures.push_back(FailingSubset{subset, achieved, required});
            if (stop_early) stopped = true;
        }
    });
    return out;
}

std::vector<Index> all_outputs(Index p)
{
    std::vector<Index> idx(static_cast<std::size_t>(p));
    for (Index j = 0; j < p; ++j) idx[static_cast<std::size_t>(j)] = j;
    return idx;
}

void check_inputs(const LtiSystem& sys, const Basis& vg, const std::vector<Basis>& rj)
{
    guard_outputs(sys);
    if (static_cast<Index>(rj.size()) != sys.p())
        throw Error(ErrorCode::DimensionMismatch, "one R*_j basis per output required");
    if (vg.ambient() != sys.n()) throw Error(ErrorCode::DimensionMismatch, "V*g basis has the wrong row count");
}

// Generalized search shared by the lambda-free and lambda-tuple variants.
SolvabilityVerdict generalized_core(const LtiSystem& sys, const Basis& vg, const std::vector<Basis>& rj,
                                    const TolerancePolicy& tol)
{
    const Index n = sys.n();
    const Index p = sys.p();
    SolvabilityVerdict v;
    v.h = subspace_sum_dim({vg}, tol);
    const Index h = v.h;
    if (h < n - p) {
        v.solvable = false;
        v.failing_count = 1;
        v.failing_subsets.push_back(FailingSubset{{}, h, n - p});
        v.global_form_solvable = false;
        return v;
    }
    if (h == n - p) {
        const auto fam = check_family(vg, rj, all_outputs(p), n - p, 0, tol, false);
        v.solvable = fam.count == 0;
        v.failing_subsets = fam.failures;
        v.failing_count = fam.count;
        if (v.solvable) v.delta = all_outputs(p);
        return v;
    }

    const auto global = check_family(vg, rj, all_outputs(p), n - p, h - (n - p) + 1, tol, false);
    v.global_form_solvable = global.count == 0;

    const Index k = n - h;
    bool found = false;
    for_each_subset(all_outputs(p), 0, [&](const std::vector<Index>& delta) {
        if (found || static_cast<Index>(delta.size()) != k) return;
        const auto fam = check_family(vg, rj, delta, h, 0, tol, true);
        if (fam.count == 0) {
            v.delta = delta;
            found = true;
        }
    });
    v.solvable = found;
    if (!found) {
        v.failing_subsets = global.failures;
        v.failing_count = global.count;
    }
    return v;
}

}  // namespace

void validate_lambdas(const LtiSystem& sys, const std::vector<double>& lambdas, const SubspaceOptions& opts)
{
    if (static_cast<Index>(lambdas.size()) != sys.p())
        throw Error(ErrorCode::DimensionMismatch, "one mode per output required");
    for (double l : lambdas)
        if (!std::isfinite(l) || !in_stability_region(l, sys.domain()))
            throw Error(ErrorCode::UnstableLambda, "mode " + std::to_string(l) + " is not in the stability region");
    const auto zeros = invariant_zeros(sys, opts.zeros);
    for (double l : lambdas)
        if (near_zero(l, zeros, opts.exclusion_radius))
            throw Error(ErrorCode::LambdaAtZero, "mode " + std::to_string(l) + " coincides with an invariant zero");
}

SolvabilityVerdict check_lambda_free(const LtiSystem& sys, const Basis& vstar_g_basis,
                                     const std::vector<Basis>& rstar_j, const TolerancePolicy& tol)
{
    check_inputs(sys, vstar_g_basis, rstar_j);
    return generalized_core(sys, vstar_g_basis, rstar_j, tol);
}

SolvabilityVerdict check_lambda_tuple(const LtiSystem& sys, const Basis& vstar_g_basis,
                                      const std::vector<double>& lambdas, const std::vector<Basis>& rstar_j_at_lambda,
                                      const SubspaceOptions& opts)
{
    check_inputs(sys, vstar_g_basis, rstar_j_at_lambda);
    validate_lambdas(sys, lambdas, opts);
    SolvabilityVerdict v;
    v.h = subspace_sum_dim({vstar_g_basis}, opts.tol);
    const Index base = sys.n() - sys.p();
    const auto fam = check_family(vstar_g_basis, rstar_j_at_lambda, all_outputs(sys.p()), base, 0, opts.tol, false);
    v.solvable = fam.count == 0;
    v.failing_subsets = fam.failures;
    v.failing_count = fam.count;
    if (v.solvable) v.delta = all_outputs(sys.p());
    return v;
}

SolvabilityVerdict check_generalized(const LtiSystem& sys, const Basis& vstar_g_basis,
                                     const std::vector<double>& lambdas, const std::vector<Basis>& rstar_j_at_lambda,
                                     const SubspaceOptions& opts)
{
    check_inputs(sys, vstar_g_basis, rstar_j_at_lambda);
    const Index h = subspace_sum_dim({vstar_g_basis}, opts.tol);
    if (h == sys.n() - sys.p()) return check_lambda_tuple(sys, vstar_g_basis, lambdas, rstar_j_at_lambda, opts);
    validate_lambdas(sys, lambdas, opts);
    return generalized_core(sys, vstar_g_basis, rstar_j_at_lambda, opts.tol);
}

std::vector<Basis> rstar_j_all(const LtiSystem& sys, const std::vector<double>& pool, const SubspaceOptions& opts)
{
    guard_outputs(sys);
    std::vector<Basis> out;
    for (Index j = 0; j < sys.p(); ++j) out.push_back(rstar(sys, j, pool, opts).basis());
    return out;
}

std::vector<Basis> rstar_j_at(const LtiSystem& sys, const std::vector<double>& lambdas, const SubspaceOptions& opts)
{
    guard_outputs(sys);
    if (static_cast<Index>(lambdas.size()) != sys.p())
        throw Error(ErrorCode::DimensionMismatch, "one mode per output required");
    std::vector<Basis> out;
    for (Index j = 0; j < sys.p(); ++j)
        out.push_back(rstar_at(sys, lambdas[static_cast<std::size_t>(j)], j, opts).basis());
    return out;
}

PerturbationResult perturb_until_solvable(const LtiSystem& sys, const Basis& vstar_g_basis,
                                          const std::vector<double>& lambdas, const SubspaceOptions& opts,
                                          int max_attempts, double initial_radius)
{
    PerturbationResult res;
    res.lambdas = lambdas;
    res.verdict = check_generalized(sys, vstar_g_basis, lambdas, rstar_j_at(sys, lambdas, opts), opts);
    if (res.verdict.solvable) return res;

    const auto zeros = invariant_zeros(sys, opts.zeros);
    Rng rng(opts.seed, 300);
    double radius = initial_radius;
    for (int a = 1; a <= max_attempts; ++a, radius *= 2.0) {
        std::vector<double> trial = lambdas;
        for (double& l : trial) {
            const double offset = rng.uniform(-radius, radius);
            double candidate = l + offset;
            if (!in_stability_region(candidate, sys.domain()) || near_zero(candidate, zeros, opts.exclusion_radius))
                candidate = l - offset;
            l = candidate;
        }
        res.attempts = a;
        res.lambdas = trial;
        try {
            res.verdict = check_generalized(sys, vstar_g_basis, trial, rstar_j_at(sys, trial, opts), opts);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::FrequencyIsZero && e.code() != ErrorCode::LambdaAtZero &&
                e.code() != ErrorCode::UnstableLambda)
                throw;
            continue;
        }
        if (res.verdict.solvable) return res;
    }
    return res;
}

}  // namespace monotrack
