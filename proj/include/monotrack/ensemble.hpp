#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "monotrack/synthesis.hpp"

namespace monotrack {

struct GeneratorSpec {
    Index n = 1;
    Index m = 1;
    Index p = 1;
    TimeDomain domain = TimeDomain::Continuous;
    std::vector<Complex> planted_zero_values;
    std::vector<double> planted_uncontrollable_modes;
    // Rows of D (from the top) that get random feedthrough; the rest are zero.
    Index feedthrough_rows = 0;
    std::uint64_t seed = 1;
    int max_attempts = 20;
};

// Random system passing the assumption audit. Zeros are planted by output
// filters (s - z)/(s - a) in cascade, uncontrollable modes by a
// block-triangular state that the input cannot reach. A planted zero equal to
// a planted uncontrollable mode is realized by the mode alone.
LtiSystem generate(const GeneratorSpec& spec);

struct GenericityStats {
    int trials = 0;
    int rstar_rank_deficient = 0;
    int vstar_g_rank_deficient = 0;
    int direction_rank_deficient = 0;
    int synthesis_failures = 0;
    int full_rank_successes = 0;
    std::vector<std::uint64_t> failing_seeds;

    int rank_deficiency_events() const
    {
        return rstar_rank_deficient + vstar_g_rank_deficient + direction_rank_deficient;
    }
    double success_fraction() const { return trials ? static_cast<double>(full_rank_successes) / trials : 0.0; }
};

// Each trial draws fresh K/H coefficients for R* and V*g (literal pool-first
// construction), random directions from the R*_j(lambda_j) kernels, and runs a
// seeded synthesis. A trial succeeds when every draw is full rank on the
// first try and synthesis returns a verified gain.
GenericityStats genericity_trial(const LtiSystem& sys, const std::vector<double>& lambdas, int trials,
                                 std::uint64_t base_seed = 1, const SubspaceOptions& opts = {});

// FNV-1a over the domain tag and matrix entries, as 16 hex digits.
std::string fixture_hash(const LtiSystem& sys);

}  // namespace monotrack
