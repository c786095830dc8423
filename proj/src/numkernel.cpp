#include "monotrack/numkernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "monotrack/errors.hpp"

namespace monotrack {

double TolerancePolicy::threshold(double sigma_max, Index rows, Index cols) const
{
    const double rel = relative_rank_tol
                           ? *relative_rank_tol
                           : static_cast<double>(std::max(rows, cols)) *
                                 std::numeric_limits<double>::epsilon() * safety_factor;
    return std::max(rel * sigma_max, absolute_floor);
}

TolerancePolicy TolerancePolicy::with_relative(double rel) const
{
    TolerancePolicy copy = *this;
    copy.relative_rank_tol = rel;
    return copy;
}

void TolerancePolicy::validate() const
{
    const bool ok = (!relative_rank_tol || *relative_rank_tol > 0.0) && safety_factor > 0.0 &&
                    absolute_floor > 0.0 && residual_tol > 0.0 && pencil_rank_tol > 0.0 &&
                    structural_rank_tol > 0.0;
    if (!ok) throw Error(ErrorCode::InvalidArgument, "tolerances must be strictly positive");
}

Basis::Basis(Matrix cols) : columns(std::move(cols)), tags(columns.cols()) {}

Basis::Basis(Matrix cols, std::vector<std::optional<Complex>> column_tags)
    : columns(std::move(cols)), tags(std::move(column_tags))
{
    if (static_cast<Index>(tags.size()) != columns.cols())
        throw Error(ErrorCode::DimensionMismatch, "one tag per basis column required");
}

Basis Basis::empty(Index ambient)
{
    return Basis(Matrix(ambient, 0));
}

namespace {

template <typename Mat>
Index count_above(const Mat& M, const TolerancePolicy& tol)
{
    if (M.size() == 0) return 0;
    Eigen::JacobiSVD<Mat> svd(M);
    const auto& s = svd.singularValues();
    const double thr = tol.threshold(s(0), M.rows(), M.cols());
    Index r = 0;
    for (Index i = 0; i < s.size(); ++i)
        if (s(i) > thr) ++r;
    return r;
}

template <typename Mat>
Mat kernel_of(const Mat& M, const TolerancePolicy& tol)
{
    const Index cols = M.cols();
    if (M.rows() == 0) return Mat::Identity(cols, cols);
    Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    const double thr = tol.threshold(s.size() ? s(0) : 0.0, M.rows(), cols);
    Index r = 0;
    for (Index i = 0; i < s.size(); ++i)
        if (s(i) > thr) ++r;
    return svd.matrixV().rightCols(cols - r);
}

}  // namespace

Index rank_of(const Matrix& M, const TolerancePolicy& tol)
{
    return count_above(M, tol);
}

Index rank_of(const CMatrix& M, const TolerancePolicy& tol)
{
    return count_above(M, tol);
}

Basis nullspace(const Matrix& M, const TolerancePolicy& tol)
{
    return Basis(kernel_of(M, tol));
}

CMatrix nullspace(const CMatrix& M, const TolerancePolicy& tol)
{
    return kernel_of(M, tol);
}

Vector min_norm_solve(const Matrix& M, const Vector& b, const TolerancePolicy& tol)
{
    if (M.rows() != b.size()) throw Error(ErrorCode::DimensionMismatch, "rhs length differs from row count");
    Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    const double smax = s.size() ? s(0) : 0.0;
    const double thr = tol.threshold(smax, M.rows(), M.cols());
    Vector coeff = svd.matrixU().transpose() * b;
    for (Index i = 0; i < s.size(); ++i) coeff(i) = s(i) > thr ? coeff(i) / s(i) : 0.0;
    Vector x = svd.matrixV() * coeff;
    const double res = (M * x - b).norm();
    if (res > tol.residual_tol * (smax * x.norm() + b.norm()) && res > tol.absolute_floor)
        throw Error(ErrorCode::Unsolvable, "right-hand side is not in the range (residual " + std::to_string(res) + ")");
    return x;
}

Matrix hcat(const Matrix& X, const Matrix& Y)
{
    if (X.rows() != Y.rows()) throw Error(ErrorCode::DimensionMismatch, "row counts differ");
    Matrix out(X.rows(), X.cols() + Y.cols());
    out << X, Y;
    return out;
}

Matrix orth(const Matrix& M, const TolerancePolicy& tol)
{
    if (M.cols() == 0) return Matrix(M.rows(), 0);
    Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeThinU);
    const auto& s = svd.singularValues();
    const double thr = tol.threshold(s(0), M.rows(), M.cols());
    Index r = 0;
    for (Index i = 0; i < s.size(); ++i)
        if (s(i) > thr) ++r;
    return svd.matrixU().leftCols(r);
}

Matrix orth_complement(const Matrix& M, const TolerancePolicy& tol)
{
    const Index n = M.rows();
    if (M.cols() == 0) return Matrix::Identity(n, n);
    Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeFullU);
    const auto& s = svd.singularValues();
    const double thr = tol.threshold(s(0), M.rows(), M.cols());
    Index r = 0;
    for (Index i = 0; i < s.size(); ++i)
        if (s(i) > thr) ++r;
    return svd.matrixU().rightCols(n - r);
}

Matrix intersect(const Matrix& X, const Matrix& Y, const TolerancePolicy& tol)
{
    const Matrix qx = orth(X, tol);
    const Matrix qy = orth(Y, tol);
    if (qx.cols() == 0 || qy.cols() == 0) return Matrix(X.rows(), 0);
    const Matrix stacked = hcat(qx, -qy);
    const Matrix k = kernel_of(stacked, tol);
    return orth(qx * k.topRows(qx.cols()), tol);
}

Index subspace_sum_dim(const std::vector<Basis>& bases, const TolerancePolicy& tol)
{
    if (bases.empty()) return 0;
    const Index n = bases.front().ambient();
    Index total = 0;
    for (const auto& b : bases) {
        if (b.ambient() != n) throw Error(ErrorCode::DimensionMismatch, "bases live in different spaces");
        total += b.dim();
    }
    if (total == 0) return 0;
    const TolerancePolicy st = tol.structural();
    Matrix all(n, total);
    Index at = 0;
    for (const auto& b : bases) {
        if (b.dim() == 0) continue;
        const Matrix q = orth(b.columns, st);
        all.middleCols(at, q.cols()) = q;
        at += q.cols();
    }
    return std::min(rank_of(Matrix(all.leftCols(at)), st), n);
}

Vector realify_pair(const CVector& v, PairPosition position)
{
    return position == PairPosition::Odd ? Vector(v.real()) : Vector(v.imag());
}

double containment_residual(const Matrix& sub, const Matrix& super, const TolerancePolicy& tol)
{
    const TolerancePolicy st = tol.structural();
    const Matrix qs = orth(sub, st);
    if (qs.cols() == 0) return 0.0;
    const Matrix q = orth(super, st);
    const Matrix rest = qs - q * (q.transpose() * qs);
    Eigen::JacobiSVD<Matrix> svd(rest);
    return svd.singularValues()(0);
}

bool spans_equal(const Matrix& X, const Matrix& Y, double residual, const TolerancePolicy& tol)
{
    return containment_residual(X, Y, tol) <= residual && containment_residual(Y, X, tol) <= residual;
}

}  // namespace monotrack
