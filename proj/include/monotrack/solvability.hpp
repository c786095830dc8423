#pragma once

#include <optional>
#include <vector>

#include "monotrack/subspaces.hpp"

namespace monotrack {

struct FailingSubset {
    std::vector<Index> subset;  // zero-based output indices
    Index achieved = 0;
    Index required = 0;
};

struct SolvabilityVerdict {
    bool solvable = false;
    // Smallest cardinality first, capped at max_reported_failures.
    std::vector<FailingSubset> failing_subsets;
    std::size_t failing_count = 0;
    Index h = 0;
    std::optional<std::vector<Index>> delta;
    // Cross-check through the condition family restricted to large subsets.
    std::optional<bool> global_form_solvable;

    static constexpr std::size_t max_reported_failures = 32;
};

constexpr Index kMaxOutputs = 20;

// Rejects unstable tuples, tuples of the wrong length, and values that sit on
// an invariant zero of sys.
void validate_lambdas(const LtiSystem& sys, const std::vector<double>& lambdas, const SubspaceOptions& opts = {});

SolvabilityVerdict check_lambda_free(const LtiSystem& sys, const Basis& vstar_g_basis,
                                     const std::vector<Basis>& rstar_j, const TolerancePolicy& tol = {});

SolvabilityVerdict check_lambda_tuple(const LtiSystem& sys, const Basis& vstar_g_basis,
                                      const std::vector<double>& lambdas, const std::vector<Basis>& rstar_j_at_lambda,
                                      const SubspaceOptions& opts = {});

SolvabilityVerdict check_generalized(const LtiSystem& sys, const Basis& vstar_g_basis,
                                     const std::vector<double>& lambdas, const std::vector<Basis>& rstar_j_at_lambda,
                                     const SubspaceOptions& opts = {});

// R*_j for every output (lambda-free).
std::vector<Basis> rstar_j_all(const LtiSystem& sys, const std::vector<double>& pool, const SubspaceOptions& opts = {});
// R*_j(lambda_j) for every output.
std::vector<Basis> rstar_j_at(const LtiSystem& sys, const std::vector<double>& lambdas,
                              const SubspaceOptions& opts = {});

struct PerturbationResult {
    std::vector<double> lambdas;
    int attempts = 0;
    SolvabilityVerdict verdict;
};

// Perturbs the tuple with seeded offsets of growing radius until the tuple
// condition passes. attempts = 0 means the original tuple already passed.
PerturbationResult perturb_until_solvable(const LtiSystem& sys, const Basis& vstar_g_basis,
                                          const std::vector<double>& lambdas, const SubspaceOptions& opts = {},
                                          int max_attempts = 10, double initial_radius = 1e-3);

}  // namespace monotrack
