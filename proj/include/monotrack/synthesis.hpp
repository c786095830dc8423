#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "monotrack/solvability.hpp"

namespace monotrack {

struct DirectionPair {
    Vector v;
    Vector w;
    double beta = 0.0;
    Index output_index = 0;
    double mode = 0.0;
};

// User-supplied bases that pin down an otherwise non-unique gain.
struct ReplayInputs {
    std::optional<PairedBasis> vstar_g;
    // Direction pairs keyed by output_index; missing outputs are computed.
    std::vector<DirectionPair> directions;
};

struct SynthesisSpec {
    std::vector<double> lambdas;
    Vector reference;
    // Empty means the default pool for the system's domain.
    std::vector<double> free_pool;
    std::uint64_t seed = 1;
    int max_retries = 5;
    std::optional<ReplayInputs> replay;
    SubspaceOptions subspace;
};

struct FeedbackResult {
    Matrix F;
    Vector x_ss;
    Vector u_ss;
    Matrix V;
    Matrix W;
    std::vector<Complex> closed_loop_spectrum;
    // Per output: assigned mode, or empty for instantaneous tracking.
    std::vector<std::optional<double>> assigned_modes;
    std::vector<Index> delta;
    std::vector<DirectionPair> directions;
    PairedBasis vstar_g;
    SolvabilityVerdict verdict;
};

struct DirectionOptions {
    std::uint64_t seed = 1;
    int max_retries = 5;
    SubspaceOptions subspace;
};

DirectionPair direction_for_output(const LtiSystem& sys, Index j, double lambda, const DirectionOptions& opts = {});

// Random pair from the R*_j(lambda) kernel with a nonzero j-th output.
DirectionPair random_direction(const LtiSystem& sys, Index j, double lambda, Rng& rng,
                               const SubspaceOptions& opts = {});

std::pair<Vector, Vector> steady_state(const LtiSystem& sys, const Vector& r, const TolerancePolicy& tol = {});

// Largest block residual of the equilibrium equations at (x, u).
double steady_state_residual(const LtiSystem& sys, const Vector& r, const Vector& x, const Vector& u);

FeedbackResult synthesize(const LtiSystem& sys, const SynthesisSpec& spec);

Vector control_input(const FeedbackResult& fb, const Vector& x);

// Modes the construction places: assigned lambdas then the V*g column modes.
std::vector<Complex> expected_spectrum(const FeedbackResult& fb);

// Multiplicity-aware matching: every element pairs with a distinct partner
// within tol (relative to max(1, |z|)).
bool spectra_match(std::vector<Complex> a, std::vector<Complex> b, double tol);

std::vector<Complex> eigenvalues(const Matrix& M);

}  // namespace monotrack
