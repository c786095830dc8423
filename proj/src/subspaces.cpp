#include "monotrack/subspaces.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "monotrack/errors.hpp"

namespace monotrack {

Basis PairedBasis::basis() const
{
    std::vector<std::optional<Complex>> tags;
    for (const auto& m : modes) tags.emplace_back(m.value);
    return Basis(V, tags);
}

std::vector<Complex> PairedBasis::spectrum() const
{
    std::vector<Complex> out;
    for (const auto& m : modes) {
        if (m.kind == ColumnMode::Kind::PairIm) out.push_back(std::conj(m.value));
        else out.push_back(m.value);
    }
    return out;
}

namespace {

constexpr std::uint64_t kStreamRstar = 100;
constexpr std::uint64_t kStreamVg = 200;

template <typename Mat>
struct KernelParts {
    Mat V;
    Mat W;
};

// State part of a pencil kernel N = [Vn; Wn], restricted to the range of Vn so
// that V has orthonormal columns and W stays paired with it.
template <typename Mat>
KernelParts<Mat> state_part(const Mat& N, Index n, double thr)
{
    const Index m = N.rows() - n;
    if (N.cols() == 0) return {Mat(n, 0), Mat(m, 0)};
    const Mat Vn = N.topRows(n);
    const Mat Wn = N.bottomRows(m);
    Eigen::JacobiSVD<Mat> svd(Vn, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    Index r = 0;
    for (Index i = 0; i < s.size(); ++i)
        if (s(i) > thr) ++r;
    Mat X = svd.matrixV().leftCols(r);
    for (Index i = 0; i < r; ++i) X.col(i) /= s(i);
    return {svd.matrixU().leftCols(r), Wn * X};
}

KernelParts<Matrix> kernel_at(const LtiSystem& s, double mu, const TolerancePolicy& tol)
{
    const Matrix N = nullspace(rosenbrock(s, mu), tol.structural()).columns;
    return state_part(N, s.n(), tol.structural_rank_tol);
}

KernelParts<Matrix> kernel_at_zero(const LtiSystem& s, double z, const TolerancePolicy& tol)
{
    const Matrix N = nullspace(rosenbrock(s, z), tol.pencil()).columns;
    return state_part(N, s.n(), tol.structural_rank_tol);
}

KernelParts<CMatrix> kernel_at_zero(const LtiSystem& s, Complex z, const TolerancePolicy& tol)
{
    const CMatrix N = nullspace(rosenbrock(s, z), tol.pencil());
    return state_part(N, s.n(), tol.structural_rank_tol);
}

double draw(const SubspaceOptions& opts, Rng& rng)
{
    return opts.mixing ? opts.mixing(rng) : rng.uniform(-1.0, 1.0);
}

Matrix draw_matrix(Index rows, Index cols, const SubspaceOptions& opts, Rng& rng)
{
    Matrix K(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) K(i, j) = draw(opts, rng);
    return K;
}

void validate_pool(const LtiSystem& s, const std::vector<double>& pool, const std::vector<InvariantZero>& zeros,
                   double radius)
{
    for (std::size_t i = 0; i < pool.size(); ++i) {
        const double mu = pool[i];
        if (!std::isfinite(mu) || !in_stability_region(mu, s.domain()))
            throw Error(ErrorCode::InvalidArgument, "pool values must be real and stable");
        for (std::size_t k = 0; k < i; ++k)
            if (pool[k] == mu) throw Error(ErrorCode::InvalidArgument, "pool values must be distinct");
        if (near_zero(mu, zeros, radius))
            throw Error(ErrorCode::FrequencyIsZero, "pool value " + std::to_string(mu) + " is an invariant zero");
    }
}

struct Accumulator {
    Index n;
    Matrix V, W;
    std::vector<ColumnMode> modes;
    TolerancePolicy tol;

    Index rank() const { return V.cols() == 0 ? 0 : rank_of(orth_cols(V), tol.structural()); }
    Index rank_with(const Matrix& extra) const
    {
        return subspace_sum_dim({Basis(V), Basis(extra)}, tol);
    }
    static Matrix orth_cols(const Matrix& M)
    {
        Matrix out = M;
        for (Index j = 0; j < out.cols(); ++j) {
            const double nv = out.col(j).norm();
            if (nv > 0.0) out.col(j) /= nv;
        }
        return out;
    }
    void push(const Vector& v, const Vector& w, ColumnMode mode)
    {
        double scale = v.norm();
        if (scale == 0.0) scale = 1.0;
        V.conservativeResize(n, V.cols() + 1);
        V.col(V.cols() - 1) = v / scale;
        W.conservativeResize(w.size(), W.cols() + 1);
        W.col(W.cols() - 1) = w / scale;
        modes.push_back(mode);
    }
    // Re and Im columns share one scale, otherwise the rotation block breaks.
    void push_pair(const CVector& v, const CVector& w, Complex value, bool from_zero)
    {
        double scale = v.norm();
        if (scale == 0.0) scale = 1.0;
        for (PairPosition pos : {PairPosition::Odd, PairPosition::Even}) {
            V.conservativeResize(n, V.cols() + 1);
            V.col(V.cols() - 1) = realify_pair(v, pos) / scale;
            W.conservativeResize(w.size(), W.cols() + 1);
            W.col(W.cols() - 1) = realify_pair(w, pos) / scale;
            modes.push_back(ColumnMode{value, pos == PairPosition::Odd ? ColumnMode::Kind::PairRe
                                                                       : ColumnMode::Kind::PairIm, from_zero});
        }
    }
    PairedBasis finish(int draws) const { return PairedBasis{V, W, modes, draws}; }
};

Accumulator make_accumulator(const LtiSystem& s, const TolerancePolicy& tol)
{
    return Accumulator{s.n(), Matrix(s.n(), 0), Matrix(s.m(), 0), {}, tol};
}

struct Saturation {
    Matrix span;
    std::size_t used = 0;
};

// Sum R*(mu_1) + ... over the pool until adding a value brings no growth.
Saturation saturate(const LtiSystem& s, const std::vector<double>& pool, const TolerancePolicy& tol)
{
    Saturation sat{Matrix(s.n(), 0), 0};
    Index dim = 0;
    for (std::size_t k = 0; k < pool.size(); ++k) {
        const auto kp = kernel_at(s, pool[k], tol);
        const Index next = subspace_sum_dim({Basis(sat.span), Basis(kp.V)}, tol);
        if (next == dim) return sat;
        sat.span = orth(hcat(sat.span, kp.V), tol.structural());
        dim = next;
        sat.used = k + 1;
        if (dim == s.n()) return sat;
    }
    throw Error(ErrorCode::SaturationFailure, "R* dimension still growing when the pool ran out (" +
                                                  std::to_string(pool.size()) + " values)");
}

// One mixed kernel column per pool value.
bool mix_one_per_value(const LtiSystem& s, const std::vector<double>& pool, Index r, const SubspaceOptions& opts,
                       Rng& rng, Accumulator& acc)
{
    for (Index i = 0; i < r; ++i) {
        const auto kp = kernel_at(s, pool[static_cast<std::size_t>(i)], opts.tol);
        if (kp.V.cols() == 0) return false;
        const Vector k = draw_matrix(kp.V.cols(), 1, opts, rng).col(0);
        acc.push(kp.V * k, kp.W * k, ColumnMode{Complex(pool[static_cast<std::size_t>(i)], 0.0)});
    }
    return true;
}

}  // namespace

std::vector<double> default_pool(TimeDomain domain, std::size_t count, const std::vector<InvariantZero>& zeros,
                                 double exclusion_radius)
{
    std::vector<double> pool;
    for (int k = 0; pool.size() < count && k < 10000; ++k) {
        double mu = 0.0;
        if (domain == TimeDomain::Continuous) mu = -1.0 - 0.5 * k;
        else mu = k < 10 ? 0.5 - 0.05 * k : 0.05 * std::pow(0.5, k - 9);
        if (near_zero(mu, zeros, std::max(exclusion_radius, 1e-3))) continue;
        pool.push_back(mu);
    }
    return pool;
}

PairedBasis rstar_at(const LtiSystem& sys, double mu, std::optional<Index> excluded_output,
                     const SubspaceOptions& opts)
{
    const LtiSystem s = excluded_output ? sys.without_output(*excluded_output) : sys;
    if (!std::isfinite(mu)) throw Error(ErrorCode::InvalidArgument, "frequency must be finite");
    const auto zeros = invariant_zeros(s, opts.zeros);
    if (near_zero(mu, zeros, opts.exclusion_radius))
        throw Error(ErrorCode::FrequencyIsZero, "frequency " + std::to_string(mu) + " is an invariant zero");
    const auto kp = kernel_at(s, mu, opts.tol);
    std::vector<ColumnMode> modes(kp.V.cols(), ColumnMode{Complex(mu, 0.0)});
    return PairedBasis{kp.V, kp.W, modes, 1};
}

PairedBasis rstar(const LtiSystem& sys, std::optional<Index> excluded_output, const std::vector<double>& pool,
                  const SubspaceOptions& opts)
{
    const LtiSystem s = excluded_output ? sys.without_output(*excluded_output) : sys;
    if (static_cast<Index>(pool.size()) < s.n())
        throw Error(ErrorCode::InvalidArgument, "pool must hold at least n values");
    const auto zeros = invariant_zeros(s, opts.zeros);
    validate_pool(s, pool, zeros, opts.exclusion_radius);

    const Saturation sat = saturate(s, pool, opts.tol);
    const Index r = sat.span.cols();
    if (r == 0) return PairedBasis{Matrix(s.n(), 0), Matrix(s.m(), 0), {}, 1};

    Rng rng(opts.seed, kStreamRstar + (excluded_output ? static_cast<std::uint64_t>(*excluded_output) + 1 : 0));
    for (int attempt = 0; attempt <= opts.max_retries; ++attempt) {
        Accumulator acc = make_accumulator(s, opts.tol);
        if (mix_one_per_value(s, pool, r, opts, rng, acc) && acc.rank() == r) return acc.finish(attempt + 1);
    }
    throw Error(ErrorCode::RankDeficientAfterRetries,
                "mixed R* basis stayed rank deficient after " + std::to_string(opts.max_retries) + " retries");
}

PairedBasis vstar_g(const LtiSystem& sys, const std::vector<double>& free_pool, const SubspaceOptions& opts)
{
    const auto zeros = invariant_zeros(sys, opts.zeros);
    const auto part = classify_zeros(zeros, sys.domain());
    for (const auto& z : part.minimum_phase)
        if (z.geometric_multiplicity != 1 || z.algebraic_multiplicity != 1)
            throw Error(ErrorCode::AssumptionViolated, "coincident minimum-phase invariant zeros");
    validate_pool(sys, free_pool, zeros, opts.exclusion_radius);

    const Saturation sat = saturate(sys, free_pool, opts.tol);
    const Index r = sat.span.cols();

    struct ZeroKernel {
        Complex value;
        KernelParts<Matrix> real;
        KernelParts<CMatrix> cplx;
    };
    std::vector<ZeroKernel> zk;
    std::vector<Basis> parts{Basis(sat.span)};
    for (const auto& z : part.minimum_phase) {
        if (z.value.imag() < 0.0) continue;
        ZeroKernel k{z.value, {}, {}};
        if (z.value.imag() == 0.0) {
            k.real = kernel_at_zero(sys, z.value.real(), opts.tol);
            parts.emplace_back(k.real.V);
        } else {
            // Kernel at conj(z) so that [Re, Im] carries the block [[Re z, -Im z], [Im z, Re z]].
            k.cplx = kernel_at_zero(sys, std::conj(z.value), opts.tol);
            parts.emplace_back(hcat(k.cplx.V.real(), k.cplx.V.imag()));
        }
        zk.push_back(k);
    }
    const Index h = subspace_sum_dim(parts, opts.tol);

    Rng rng(opts.seed, kStreamVg);
    for (int attempt = 0; attempt <= opts.max_retries; ++attempt) {
        Accumulator acc = make_accumulator(sys, opts.tol);
        bool ok = true;
        if (opts.order == VgOrder::PoolFirst) {
            ok = mix_one_per_value(sys, free_pool, r, opts, rng, acc);
            for (const auto& k : zk) {
                if (!ok) break;
                if (k.value.imag() == 0.0) {
                    const Vector hcoef = draw_matrix(k.real.V.cols(), 1, opts, rng).col(0);
                    acc.push(k.real.V * hcoef, k.real.W * hcoef, ColumnMode{k.value, ColumnMode::Kind::Real, true});
                } else {
                    const Index d = k.cplx.V.cols();
                    const CVector hcoef = (draw_matrix(d, 1, opts, rng).col(0).cast<Complex>() +
                                           Complex(0.0, 1.0) * draw_matrix(d, 1, opts, rng).col(0).cast<Complex>());
                    const CVector v = k.cplx.V * hcoef;
                    const CVector w = k.cplx.W * hcoef;
                    acc.push_pair(v, w, k.value, true);
                }
            }
        } else {
            for (const auto& k : zk) {
                const Index cur = acc.rank();
                if (k.value.imag() == 0.0) {
                    const Index d = k.real.V.cols();
                    const Index gain = std::min(acc.rank_with(k.real.V) - cur, h - cur);
                    if (gain <= 0) continue;
                    const Matrix K = gain == d ? Matrix(Matrix::Identity(d, d)) : draw_matrix(d, gain, opts, rng);
                    for (Index c = 0; c < K.cols(); ++c)
                        acc.push(k.real.V * K.col(c), k.real.W * K.col(c),
                                 ColumnMode{k.value, ColumnMode::Kind::Real, true});
                } else {
                    const Index d = k.cplx.V.cols();
                    const Index gain =
                        std::min(acc.rank_with(hcat(k.cplx.V.real(), k.cplx.V.imag())) - cur, h - cur) / 2;
                    if (gain <= 0) continue;
                    CMatrix K;
                    if (gain == d) {
                        K = CMatrix::Identity(d, d);
                    } else {
                        K = draw_matrix(d, gain, opts, rng).cast<Complex>() +
                            Complex(0.0, 1.0) * draw_matrix(d, gain, opts, rng).cast<Complex>();
                    }
                    for (Index c = 0; c < K.cols(); ++c) {
                        const CVector v = k.cplx.V * K.col(c);
                        const CVector w = k.cplx.W * K.col(c);
                        acc.push_pair(v, w, k.value, true);
                    }
                }
            }
            for (std::size_t i = 0; i < free_pool.size() && acc.rank() < h; ++i) {
                const auto kp = kernel_at(sys, free_pool[i], opts.tol);
                const Index cur = acc.rank();
                const Index gain = std::min(acc.rank_with(kp.V) - cur, h - cur);
                if (gain <= 0) continue;
                const Matrix K = draw_matrix(kp.V.cols(), gain, opts, rng);
                for (Index c = 0; c < gain; ++c)
                    acc.push(kp.V * K.col(c), kp.W * K.col(c), ColumnMode{Complex(free_pool[i], 0.0)});
            }
        }
        if (ok && acc.V.cols() == h && acc.rank() == h) return acc.finish(attempt + 1);
    }
    throw Error(ErrorCode::RankDeficientAfterRetries,
                "V*g basis stayed rank deficient after " + std::to_string(opts.max_retries) + " retries");
}

namespace {

// Orthonormal range of M with an absolute threshold (M is built from
// orthonormal kernel bases, so its scale is one).
Matrix range_abs(const Matrix& M, double thr)
{
    if (M.cols() == 0) return Matrix(M.rows(), 0);
    Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeThinU);
    const auto& s = svd.singularValues();
    Index r = 0;
    for (Index i = 0; i < s.size(); ++i)
        if (s(i) > thr) ++r;
    return svd.matrixU().leftCols(r);
}

}  // namespace

Basis vstar_recursive(const LtiSystem& sys, const TolerancePolicy& tol)
{
    const Index n = sys.n();
    const TolerancePolicy st = tol.structural();
    Matrix current = Matrix::Identity(n, n);
    for (Index iter = 0; iter <= n + 1; ++iter) {
        const Matrix Q = orth_complement(current, st);
        Matrix M(Q.cols() + sys.p(), n + sys.m());
        M << Q.transpose() * sys.A(), Q.transpose() * sys.B(), sys.C(), sys.D();
        const Matrix K = nullspace(M, st).columns;
        Matrix next = range_abs(K.topRows(n), tol.structural_rank_tol);
        if (next.cols() > 0 && current.cols() < n) next = intersect(next, current, st);
        if (next.cols() == current.cols()) return Basis(current);
        current = next;
        if (current.cols() == 0) break;
    }
    return Basis(current);
}

Basis sstar_recursive(const LtiSystem& sys, const TolerancePolicy& tol)
{
    const Index n = sys.n();
    const TolerancePolicy st = tol.structural();
    Matrix current(n, 0);
    for (Index iter = 0; iter <= n + 1; ++iter) {
        const Index k = current.cols();
        Matrix M(sys.p(), k + sys.m());
        M << sys.C() * current, sys.D();
        const Matrix K = nullspace(M, st).columns;
        Matrix AB(n, k + sys.m());
        AB << sys.A() * current, sys.B();
        const Matrix img = AB * K;
        const Matrix next = img.cols() == 0 ? Matrix(n, 0) : orth(hcat(current, img), st);
        if (next.cols() == current.cols()) return Basis(current);
        current = next;
        if (current.cols() == n) break;
    }
    return Basis(current);
}

Basis rstar_recursive(const LtiSystem& sys, const TolerancePolicy& tol)
{
    const Basis v = vstar_recursive(sys, tol);
    const Basis s = sstar_recursive(sys, tol);
    return Basis(intersect(v.columns, s.columns, tol.structural()));
}

double paired_residual(const LtiSystem& sys, const PairedBasis& pb)
{
    const double scale = std::max(1.0, rosenbrock(sys, 0.0).norm());
    double worst = 0.0;
    for (Index i = 0; i < pb.dim(); ++i) {
        const auto& mode = pb.modes[static_cast<std::size_t>(i)];
        const Vector v = pb.V.col(i);
        const Vector w = pb.W.col(i);
        const double size = std::max(std::hypot(v.norm(), w.norm()), 1e-300);
        double res = 0.0;
        if (mode.kind == ColumnMode::Kind::Real) {
            const double mu = mode.value.real();
            res = std::hypot((sys.A() * v - mu * v + sys.B() * w).norm(), (sys.C() * v + sys.D() * w).norm());
        } else if (mode.kind == ColumnMode::Kind::PairRe && i + 1 < pb.dim()) {
            const Vector v2 = pb.V.col(i + 1);
            const Vector w2 = pb.W.col(i + 1);
            const double x = mode.value.real();
            const double y = mode.value.imag();
            const Vector r1 = sys.A() * v + sys.B() * w - (x * v + y * v2);
            const Vector r2 = sys.A() * v2 + sys.B() * w2 - (-y * v + x * v2);
            res = std::hypot(std::hypot(r1.norm(), r2.norm()),
                             std::hypot((sys.C() * v + sys.D() * w).norm(), (sys.C() * v2 + sys.D() * w2).norm()));
        } else {
            continue;
        }
        worst = std::max(worst, res / (scale * size));
    }
    return worst;
}

}  // namespace monotrack
