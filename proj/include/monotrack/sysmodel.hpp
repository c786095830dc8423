#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "monotrack/numkernel.hpp"

namespace monotrack {

enum class TimeDomain { Continuous, Discrete };

const char* to_string(TimeDomain domain);

// Open left half-plane or open unit disc.
bool in_stability_region(Complex z, TimeDomain domain);
// Frequency of a constant reference: 0 (continuous) or 1 (discrete).
double tracking_frequency(TimeDomain domain);

class LtiSystem {
public:
    // Enforces consistent dimensions, full column rank of [B; D] and full
    // row rank of [C D].
    LtiSystem(Matrix A, Matrix B, Matrix C, Matrix D, TimeDomain domain = TimeDomain::Continuous,
              const TolerancePolicy& tol = {});

    // Checks dimensions only. Used for row-deleted systems and test fixtures
    // that deliberately violate the rank invariants.
    static LtiSystem relaxed(Matrix A, Matrix B, Matrix C, Matrix D, TimeDomain domain = TimeDomain::Continuous);

    // System with output row j removed (relaxed).
    LtiSystem without_output(Index j) const;

    const Matrix& A() const { return A_; }
    const Matrix& B() const { return B_; }
    const Matrix& C() const { return C_; }
    const Matrix& D() const { return D_; }
    TimeDomain domain() const { return domain_; }
    Index n() const { return A_.rows(); }
    Index m() const { return B_.cols(); }
    Index p() const { return C_.rows(); }

private:
    struct RelaxedTag {};
    LtiSystem(RelaxedTag, Matrix A, Matrix B, Matrix C, Matrix D, TimeDomain domain);

    Matrix A_, B_, C_, D_;
    TimeDomain domain_;
};

struct ZeroOptions {
    std::uint64_t seed = 0x2f6b1c9d;
    int rank_samples = 7;
    // Candidates closer than this (relative) merge into one zero.
    double cluster_tol = 1e-6;
    // Pencil rank ratios between pencil_rank_tol and this value are neither
    // a confirmed drop nor a clear miss.
    double reject_ratio = 1e-5;
    TolerancePolicy tol;
};

struct InvariantZero {
    Complex value;
    int geometric_multiplicity = 1;
    // Number of compressed-pencil eigenvalues merged into this zero.
    int algebraic_multiplicity = 1;
    bool is_minimum_phase = false;
};

struct ZeroPartition {
    std::vector<InvariantZero> minimum_phase;
    std::vector<InvariantZero> non_minimum_phase;
};

struct AssumptionReport {
    bool right_invertible = false;
    bool stabilizable = false;
    bool no_zero_at_tracking_frequency = false;
    bool distinct_min_phase_zeros = false;
    std::vector<std::string> details;

    bool all_pass() const
    {
        return right_invertible && stabilizable && no_zero_at_tracking_frequency && distinct_min_phase_zeros;
    }
};

CMatrix rosenbrock(const LtiSystem& sys, Complex lambda);
Matrix rosenbrock(const LtiSystem& sys, double lambda);

Index normal_rank(const LtiSystem& sys, const ZeroOptions& opts = {});

std::vector<InvariantZero> invariant_zeros(const LtiSystem& sys, const ZeroOptions& opts = {});

ZeroPartition classify_zeros(const std::vector<InvariantZero>& zeros, TimeDomain domain);
ZeroPartition classify_zeros(const LtiSystem& sys, const ZeroOptions& opts = {});

// Eigenvalues of A at which [A - lambda I, B] loses rank.
std::vector<Complex> uncontrollable_modes(const LtiSystem& sys, const TolerancePolicy& tol = {});

AssumptionReport audit_assumptions(const LtiSystem& sys, const ZeroOptions& opts = {});

// True when z lies within radius * max(1, |z|) of some zero.
bool near_zero(Complex z, const std::vector<InvariantZero>& zeros, double radius);

}  // namespace monotrack
