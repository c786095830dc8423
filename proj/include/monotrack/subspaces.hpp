#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "monotrack/random.hpp"
#include "monotrack/sysmodel.hpp"

namespace monotrack {

// Frequency behind one column of a paired basis. Complex zeros appear as two
// consecutive columns (real part, imaginary part) sharing the upper-half value.
struct ColumnMode {
    enum class Kind { Real, PairRe, PairIm };
    Complex value;
    Kind kind = Kind::Real;
    bool from_zero = false;
};

struct PairedBasis {
    Matrix V;
    Matrix W;
    std::vector<ColumnMode> modes;
    // Coefficient draws used (1 when the first draw had full rank).
    int draws = 1;

    Index dim() const { return V.cols(); }
    Basis basis() const;
    // Eigenvalues carried by the columns, pairs expanded to z and conj(z).
    std::vector<Complex> spectrum() const;
};

enum class VgOrder {
    // Whole kernel at each minimum-phase zero, then pool columns up to dim V*g.
    ZerosFirst,
    // One mixed column per pool value for R*, then one per zero.
    PoolFirst,
};

struct SubspaceOptions {
    std::uint64_t seed = 1;
    int max_retries = 5;
    double exclusion_radius = 1e-6;
    VgOrder order = VgOrder::ZerosFirst;
    TolerancePolicy tol;
    ZeroOptions zeros;
    // Draw for one mixing coefficient; uniform on [-1, 1] when unset.
    std::function<double(Rng&)> mixing;
};

std::vector<double> default_pool(TimeDomain domain, std::size_t count, const std::vector<InvariantZero>& zeros = {},
                                 double exclusion_radius = 1e-6);

PairedBasis rstar_at(const LtiSystem& sys, double mu, std::optional<Index> excluded_output,
                     const SubspaceOptions& opts = {});

PairedBasis rstar(const LtiSystem& sys, std::optional<Index> excluded_output, const std::vector<double>& pool,
                  const SubspaceOptions& opts = {});

PairedBasis vstar_g(const LtiSystem& sys, const std::vector<double>& free_pool, const SubspaceOptions& opts = {});

// Largest output-nulling subspace by the classical fixed-point recursion.
Basis vstar_recursive(const LtiSystem& sys, const TolerancePolicy& tol = {});
// Smallest input-containing subspace by the dual recursion.
Basis sstar_recursive(const LtiSystem& sys, const TolerancePolicy& tol = {});
// R* as the intersection of the two recursions.
Basis rstar_recursive(const LtiSystem& sys, const TolerancePolicy& tol = {});

// Largest relative residual of the pencil relations the columns must satisfy
// on sys (pass the row-deleted system for R*_j bases).
double paired_residual(const LtiSystem& sys, const PairedBasis& pb);

}  // namespace monotrack
