#pragma once

#include <complex>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace monotrack {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using Complex = std::complex<double>;

// Rank threshold: max(rel * sigma_max, absolute_floor). When relative_rank_tol
// is unset, rel = max(rows, cols) * eps * safety_factor.
struct TolerancePolicy {
    std::optional<double> relative_rank_tol;
    double safety_factor = 10.0;
    double absolute_floor = 1e-12;
    double residual_tol = 1e-9;
    // Relative threshold for deciding that a pencil has lost rank at a
    // computed zero (whose location carries rounding error).
    double pencil_rank_tol = 1e-8;
    // Relative threshold for ranks of matrices assembled from computed bases.
    double structural_rank_tol = 1e-9;

    double threshold(double sigma_max, Index rows, Index cols) const;
    TolerancePolicy with_relative(double rel) const;
    TolerancePolicy structural() const { return with_relative(structural_rank_tol); }
    TolerancePolicy pencil() const { return with_relative(pencil_rank_tol); }
    void validate() const;
};

// A subspace given by full-column-rank columns. Tags record the frequency
// that generated each column; an empty tag means "free".
struct Basis {
    Matrix columns;
    std::vector<std::optional<Complex>> tags;

    Basis() = default;
    explicit Basis(Matrix cols);
    Basis(Matrix cols, std::vector<std::optional<Complex>> column_tags);

    static Basis empty(Index ambient);

    Index dim() const { return columns.cols(); }
    Index ambient() const { return columns.rows(); }
};

enum class PairPosition { Odd, Even };

Index rank_of(const Matrix& M, const TolerancePolicy& tol = {});
Index rank_of(const CMatrix& M, const TolerancePolicy& tol = {});

Basis nullspace(const Matrix& M, const TolerancePolicy& tol = {});
CMatrix nullspace(const CMatrix& M, const TolerancePolicy& tol = {});

Vector min_norm_solve(const Matrix& M, const Vector& b, const TolerancePolicy& tol = {});

// Dimension of the sum of subspaces. Bases are orthonormalized first and the
// rank of the concatenation is taken at the structural threshold.
Index subspace_sum_dim(const std::vector<Basis>& bases, const TolerancePolicy& tol = {});

Vector realify_pair(const CVector& v, PairPosition position);

// Orthonormal basis of the column range.
Matrix orth(const Matrix& M, const TolerancePolicy& tol = {});
// Orthonormal basis of the orthogonal complement of the column range.
Matrix orth_complement(const Matrix& M, const TolerancePolicy& tol = {});
Matrix intersect(const Matrix& X, const Matrix& Y, const TolerancePolicy& tol = {});
Matrix hcat(const Matrix& X, const Matrix& Y);

// ||(I - Q Q^T) sub|| / ||sub|| with Q an orthonormal basis of super.
double containment_residual(const Matrix& sub, const Matrix& super, const TolerancePolicy& tol = {});
bool spans_equal(const Matrix& X, const Matrix& Y, double residual, const TolerancePolicy& tol = {});

}  // namespace monotrack
