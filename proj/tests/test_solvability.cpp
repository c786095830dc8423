#include <gtest/gtest.h>

#include "support.hpp"

using namespace monotrack;
using namespace testsupport;

namespace {

struct Structure {
    Basis vg;
    std::vector<Basis> rj;
    std::vector<double> pool;
};

Structure structure_of(const LtiSystem& sys, const SubspaceOptions& opts = {})
{
    Structure s;
    s.pool = default_pool(sys.domain(), static_cast<std::size_t>(sys.n() + 2), invariant_zeros(sys));
    s.vg = vstar_g(sys, s.pool, opts).basis();
    s.rj = rstar_j_all(sys, s.pool, opts);
    return s;
}

// Brute-force subset test written against the raw dimension counts.
bool brute_force_tuple(const LtiSystem& sys, const Basis& vg, const std::vector<Basis>& rj,
                       std::vector<std::vector<Index>>* failing = nullptr)
{
    const Index p = sys.p();
    bool ok = true;
    for (unsigned mask = 0; mask < (1u << p); ++mask) {
        Matrix M = vg.columns;
        Index card = 0;
        std::vector<Index> subset;
        for (Index j = 0; j < p; ++j)
            if (mask & (1u << j)) {
                M = hcat(M, rj[static_cast<std::size_t>(j)].columns);
                subset.push_back(j);
                ++card;
            }
        const Index d = M.cols() ? rank_of(orth(M), TolerancePolicy{}.structural()) : 0;
        if (d < sys.n() - p + card) {
            ok = false;
            if (failing) failing->push_back(subset);
        }
    }
    return ok;
}

LtiSystem unsolvable() { return io::load_system(fixture("unsolvable_system.json")); }
LtiSystem lambda_sensitive() { return io::load_system(fixture("lambda_sensitive_system.json")); }

}  // namespace

TEST(LambdaFree, FiveStatePlantSolvable)
{
    LtiSystem sys = five_state();
    Structure s = structure_of(sys);
    EXPECT_EQ(subspace_sum_dim({s.vg, s.rj[0]}), 5);
    EXPECT_EQ(subspace_sum_dim({s.vg, s.rj[1]}), 4);
    EXPECT_EQ(subspace_sum_dim({s.vg, s.rj[1], s.rj[2]}), 5);
    SolvabilityVerdict v = check_lambda_free(sys, s.vg, s.rj);
    EXPECT_TRUE(v.solvable);
    EXPECT_EQ(v.h, 2);
    EXPECT_EQ(v.failing_count, 0u);
    ASSERT_TRUE(v.delta.has_value());
    EXPECT_EQ(v.delta->size(), 3u);
}

TEST(LambdaTuple, FiveStatePlantSolvable)
{
    LtiSystem sys = five_state();
    Structure s = structure_of(sys);
    std::vector<double> lambdas{-1, -2, -1};
    auto rj = rstar_j_at(sys, lambdas);
    SolvabilityVerdict v = check_lambda_tuple(sys, s.vg, lambdas, rj);
    EXPECT_TRUE(v.solvable);
    EXPECT_TRUE(brute_force_tuple(sys, s.vg, rj));
}

TEST(LambdaFree, UnsolvableFixtureReportsSecondOutput)
{
    LtiSystem sys = unsolvable();
    Structure s = structure_of(sys);
    SolvabilityVerdict v = check_lambda_free(sys, s.vg, s.rj);
    EXPECT_FALSE(v.solvable);
    ASSERT_FALSE(v.failing_subsets.empty());
    EXPECT_EQ(v.failing_subsets[0].subset, std::vector<Index>{1});
    std::vector<std::vector<Index>> brute;
    EXPECT_FALSE(brute_force_tuple(sys, s.vg, s.rj, &brute));
    ASSERT_FALSE(brute.empty());
    EXPECT_EQ(brute[0], std::vector<Index>{1});
    EXPECT_EQ(v.failing_count, brute.size());
}

TEST(LambdaFree, FailureImpliesTupleFailure)
{
    LtiSystem sys = unsolvable();
    Structure s = structure_of(sys);
    ASSERT_FALSE(check_lambda_free(sys, s.vg, s.rj).solvable);
    auto zs = invariant_zeros(sys);
    Rng rng(41);
    int tested = 0;
    while (tested < 20) {
        std::vector<double> l{rng.uniform(-5.0, -0.1), rng.uniform(-5.0, -0.1)};
        if (near_zero(l[0], zs, 1e-3) || near_zero(l[1], zs, 1e-3)) continue;
        auto rj = rstar_j_at(sys, l);
        EXPECT_FALSE(check_lambda_tuple(sys, s.vg, l, rj).solvable);
        EXPECT_FALSE(brute_force_tuple(sys, s.vg, rj));
        ++tested;
    }
}

TEST(LambdaTuple, AgreesWithBruteForceOnRandomPlants)
{
    Rng rng(42);
    for (int trial = 0; trial < 20; ++trial) {
        Index p = 1 + static_cast<Index>(rng.uniform() * 3);
        LtiSystem sys = random_plant(rng, p + 2, p + 1, p, trial % 2);
        auto zs = invariant_zeros(sys);
        SubspaceOptions opts;
        std::vector<double> pool = default_pool(sys.domain(), static_cast<std::size_t>(sys.n() + 2), zs);
        Basis vg = vstar_g(sys, pool).basis();
        if (vg.dim() != sys.n() - sys.p()) continue;
        std::vector<double> l;
        for (Index j = 0; j < p; ++j) l.push_back(pool[static_cast<std::size_t>(j)]);
        auto rj = rstar_j_at(sys, l);
        EXPECT_EQ(check_lambda_tuple(sys, vg, l, rj).solvable, brute_force_tuple(sys, vg, rj)) << "trial " << trial;
    }
}

TEST(LambdaTuple, SensitiveFixtureFailsAtBadTupleOnly)
{
    LtiSystem sys = lambda_sensitive();
    Structure s = structure_of(sys);
    EXPECT_EQ(s.vg.dim(), 0);
    EXPECT_TRUE(check_lambda_free(sys, s.vg, s.rj).solvable);
    std::vector<double> bad{-2.0, -1.0 / 3.0};
    EXPECT_FALSE(check_lambda_tuple(sys, s.vg, bad, rstar_j_at(sys, bad)).solvable);
    std::vector<double> good{-1.0, -2.0};
    EXPECT_TRUE(check_lambda_tuple(sys, s.vg, good, rstar_j_at(sys, good)).solvable);
}

TEST(Perturbation, RecoversFromBadTuple)
{
    LtiSystem sys = lambda_sensitive();
    Structure s = structure_of(sys);
    std::vector<double> bad{-2.0, -1.0 / 3.0};
    PerturbationResult r = perturb_until_solvable(sys, s.vg, bad);
    EXPECT_TRUE(r.verdict.solvable);
    EXPECT_GE(r.attempts, 1);
    EXPECT_LE(r.attempts, 10);
    for (std::size_t i = 0; i < bad.size(); ++i) {
        EXPECT_NE(r.lambdas[i], bad[i]);
        EXPECT_LT(std::abs(r.lambdas[i] - bad[i]), 1e-3 * 1024);
        EXPECT_LT(r.lambdas[i], 0.0);
    }
    PerturbationResult same = perturb_until_solvable(sys, s.vg, {-1.0, -2.0});
    EXPECT_EQ(same.attempts, 0);
}

TEST(Generalized, DelegatesWhenDimensionIsExact)
{
    LtiSystem sys = five_state();
    Structure s = structure_of(sys);
    std::vector<double> l{-1, -2, -1};
    auto rj = rstar_j_at(sys, l);
    SolvabilityVerdict g = check_generalized(sys, s.vg, l, rj);
    SolvabilityVerdict t = check_lambda_tuple(sys, s.vg, l, rj);
    EXPECT_EQ(g.solvable, t.solvable);
    EXPECT_EQ(g.failing_count, t.failing_count);
}

TEST(Generalized, FullDimensionNeedsNoOutputs)
{
    // (s + 2) / (s + 1): one minimum-phase zero, V*g is the whole space.
    LtiSystem sys(-Matrix::Ones(1, 1), Matrix::Ones(1, 1), Matrix::Ones(1, 1), Matrix::Ones(1, 1));
    Structure s = structure_of(sys);
    EXPECT_EQ(s.vg.dim(), 1);
    SolvabilityVerdict v = check_generalized(sys, s.vg, {-1.0 - 1e-3}, rstar_j_at(sys, {-1.0 - 1e-3}));
    EXPECT_TRUE(v.solvable);
    ASSERT_TRUE(v.delta.has_value());
    EXPECT_TRUE(v.delta->empty());
}

TEST(Generalized, SearchAgreesWithGlobalForm)
{
    Rng rng(43);
    int found = 0;
    for (int trial = 0; trial < 400 && found < 50; ++trial) {
        Index p = 2 + static_cast<Index>(rng.uniform() * 2);
        Index n = p + 1 + static_cast<Index>(rng.uniform() * 3);
        LtiSystem sys = random_plant(rng, n, p + 1, p, 1);
        auto zs = invariant_zeros(sys);
        if (!audit_assumptions(sys).distinct_min_phase_zeros) continue;
        std::vector<double> pool = default_pool(sys.domain(), static_cast<std::size_t>(n + 2), zs);
        Basis vg = vstar_g(sys, pool).basis();
        if (vg.dim() != n - p + 1) continue;
        ++found;
        auto rj = rstar_j_all(sys, pool);
        SolvabilityVerdict v = check_lambda_free(sys, vg, rj);
        ASSERT_TRUE(v.global_form_solvable.has_value());
        EXPECT_EQ(v.solvable, *v.global_form_solvable) << "trial " << trial;
        if (v.solvable) {
            ASSERT_TRUE(v.delta.has_value());
            EXPECT_EQ(static_cast<Index>(v.delta->size()), n - vg.dim());
        }
    }
    EXPECT_GE(found, 20);
}

TEST(Generalized, TooSmallVstarGIsUnsolvable)
{
    Rng rng(44);
    int seen = 0;
    for (int trial = 0; trial < 50 && seen < 5; ++trial) {
        LtiSystem sys = random_plant(rng, 4, 2, 2);
        auto zs = invariant_zeros(sys);
        if (!audit_assumptions(sys).distinct_min_phase_zeros) continue;
        std::vector<double> pool = default_pool(sys.domain(), 6, zs);
        Basis vg = vstar_g(sys, pool).basis();
        if (vg.dim() >= 2) continue;
        ++seen;
        SolvabilityVerdict v = check_lambda_free(sys, vg, rstar_j_all(sys, pool));
        EXPECT_FALSE(v.solvable);
        ASSERT_EQ(v.failing_subsets.size(), 1u);
        EXPECT_TRUE(v.failing_subsets[0].subset.empty());
    }
    EXPECT_GT(seen, 0);
}

TEST(Validation, LambdaErrors)
{
    LtiSystem sys = five_state();
    auto code_of = [&](std::vector<double> l) {
        try {
            validate_lambdas(sys, l);
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::InvalidArgument;
    };
    EXPECT_EQ(code_of({-1, -2}), ErrorCode::DimensionMismatch);
    EXPECT_EQ(code_of({-1, 0.5, -1}), ErrorCode::UnstableLambda);
    EXPECT_EQ(code_of({-1, 0.0, -1}), ErrorCode::UnstableLambda);
    EXPECT_EQ(code_of({-1, -6, -1}), ErrorCode::LambdaAtZero);
    EXPECT_NO_THROW(validate_lambdas(sys, {-1, -2, -1}));
}

TEST(Validation, TooManyOutputs)
{
    const Index n = 21;
    LtiSystem sys(-Matrix::Identity(n, n), Matrix::Identity(n, n), Matrix::Identity(n, n), Matrix::Zero(n, n));
    std::vector<Basis> rj(static_cast<std::size_t>(n), Basis::empty(n));
    try {
        check_lambda_free(sys, Basis::empty(n), rj);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::TooManyOutputs);
    }
}

TEST(Validation, WrongBasisCount)
{
    LtiSystem sys = five_state();
    EXPECT_THROW(check_lambda_free(sys, Basis::empty(5), {Basis::empty(5)}), Error);
}
