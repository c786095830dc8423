#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "monotrack/errors.hpp"
#include "monotrack/io.hpp"
#include "monotrack/random.hpp"
#include "monotrack/simverify.hpp"

namespace testsupport {

using namespace monotrack;

inline std::string fixture(const std::string& name) { return std::string(FIXTURE_DIR) + "/" + name; }

inline LtiSystem five_state() { return io::load_system(fixture("five_state_plant.json")); }

inline ReplayInputs five_state_replay(const LtiSystem& sys)
{
    return io::load_replay(fixture("five_state_replay.json"), sys);
}

// Published values for the five-state plant.
inline Matrix published_gain()
{
    Matrix F(4, 5);
    F << 68419.0 / 8250, 802.0 / 125, -1121.0 / 125, -6, -1639.0 / 250,  //
        -5351.0 / 2475, -16.0 / 75, 6.0 / 25, 0, 127.0 / 25,             //
        5537.0 / 4950, -12.0 / 225, -36.0 / 25, 0, -162.0 / 25,           //
        4.0 / 9, 4.0 / 3, 0, 0, 0;
    return F;
}

inline Matrix published_vg()
{
    Matrix V(5, 2);
    V << -2, 0, 2.0 / 3, 0, -41.0 / 22, 0, 0, 1, -1.0 / 11, 0;
    return V;
}

inline Matrix published_wg()
{
    Matrix W(4, 2);
    W << 5, -6, 36.0 / 11, 0, 1, 0, 0, 0;
    return W;
}

// Stacked [v; w] from the pseudo-inverse solutions at lambda = (-1, -2, -1).
inline Vector published_direction(int j)
{
    Vector d(9);
    if (j == 0) {
        d << 0, -27.0 / 4, 20, -29, -3, -29, -9, -9, -9;
        return d / 18.0;
    }
    if (j == 1) {
        d << 0, 0, -9.0 / 2, 26.0 / 5, 1, 13.0 / 5, 4, 0, 0;
        return d / 21.0;
    }
    d << 0, -27.0 / 4, 7, -55.0 / 4, -3.0 / 2, -55.0 / 4, -9.0 / 2, 0, -9;
    return d / 18.0;
}

inline Vector published_xss()
{
    Vector x(5);
    x << 0, -2, 10.0 / 3, 0, -7.0 / 15;
    return x;
}

inline Vector published_uss()
{
    Vector u(4);
    u << -48.0 / 5, -14.0 / 15, -1, -2;
    return u;
}

inline Vector vec(std::initializer_list<double> xs)
{
    Vector v(static_cast<Index>(xs.size()));
    Index i = 0;
    for (double x : xs) v(i++) = x;
    return v;
}

inline Matrix unit_span(Index n, std::initializer_list<Index> idx)
{
    Matrix E = Matrix::Zero(n, static_cast<Index>(idx.size()));
    Index c = 0;
    for (Index i : idx) E(i, c++) = 1.0;
    return E;
}

inline double two_sided_residual(const Matrix& X, const Matrix& Y)
{
    return std::max(containment_residual(X, Y), containment_residual(Y, X));
}

// ---------------------------------------------------------------------------
// Seeded generators

inline Matrix random_matrix(Rng& rng, Index r, Index c)
{
    Matrix M(r, c);
    for (Index j = 0; j < c; ++j)
        for (Index i = 0; i < r; ++i) M(i, j) = rng.normal();
    return M;
}

inline Matrix random_rank(Rng& rng, Index r, Index c, Index k)
{
    return random_matrix(rng, r, k) * random_matrix(rng, k, c);
}

inline Matrix random_orthogonal(Rng& rng, Index n)
{
    Eigen::HouseholderQR<Matrix> qr(random_matrix(rng, n, n));
    return qr.householderQ() * Matrix::Identity(n, n);
}

// Random plant with m >= p. Rows of D beyond `feedthrough_rows` are zero.
inline LtiSystem random_plant(Rng& rng, Index n, Index m, Index p, Index feedthrough_rows = 0,
                              TimeDomain domain = TimeDomain::Continuous)
{
    // B and C need full rank, which m > n or p > n rules out.
    if (m > n || p > n) throw std::invalid_argument("random_plant needs m, p <= n");
    for (;;) {
        Matrix A = random_matrix(rng, n, n);
        Matrix B = random_matrix(rng, n, m);
        Matrix C = random_matrix(rng, p, n);
        Matrix D = Matrix::Zero(p, m);
        for (Index i = 0; i < std::min(feedthrough_rows, p); ++i) D.row(i) = random_matrix(rng, 1, m);
        try {
            return LtiSystem(A, B, C, D, domain);
        } catch (const Error&) {
        }
    }
}

// Square plant with invertible feedthrough.
inline LtiSystem random_biproper(Rng& rng, Index n, Index m)
{
    for (;;) {
        Matrix D = random_matrix(rng, m, m);
        if (std::abs(D.determinant()) < 0.2) continue;
        try {
            return LtiSystem(random_matrix(rng, n, n), random_matrix(rng, n, m), random_matrix(rng, m, n), D);
        } catch (const Error&) {
        }
    }
}

// ---------------------------------------------------------------------------
// Independent oracles

// Minimum-norm least-squares solution through a complete orthogonal
// decomposition (the library uses an SVD pseudo-inverse).
inline Vector oracle_min_norm(const Matrix& M, const Vector& b)
{
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(M);
    return cod.solve(b);
}

// Zeros of a plant with invertible square D: eigenvalues of A - B D^-1 C.
inline std::vector<Complex> oracle_biproper_zeros(const LtiSystem& sys)
{
    Matrix Z = sys.A() - sys.B() * sys.D().lu().solve(sys.C());
    Eigen::EigenSolver<Matrix> es(Z, false);
    std::vector<Complex> out;
    for (Index i = 0; i < Z.rows(); ++i) out.push_back(es.eigenvalues()(i));
    return out;
}

// Equilibrium residual computed directly from the defining equations.
inline double oracle_equilibrium_residual(const LtiSystem& sys, const Vector& r, const Vector& x, const Vector& u)
{
    const double w = tracking_frequency(sys.domain());
    Vector top = sys.A() * x + sys.B() * u - w * x;
    Vector bot = sys.C() * x + sys.D() * u - r;
    return std::max(top.lpNorm<Eigen::Infinity>(), bot.lpNorm<Eigen::Infinity>());
}

// Greedy multiset matching, independent of spectra_match.
inline bool oracle_same_multiset(std::vector<Complex> a, std::vector<Complex> b, double tol)
{
    if (a.size() != b.size()) return false;
    std::vector<bool> used(b.size(), false);
    auto key = [](Complex z) { return std::make_pair(z.real(), z.imag()); };
    std::sort(a.begin(), a.end(), [&](Complex x, Complex y) { return key(x) < key(y); });
    for (Complex z : a) {
        std::size_t best = b.size();
        double bd = tol;
        for (std::size_t i = 0; i < b.size(); ++i) {
            if (used[i]) continue;
            double d = std::abs(z - b[i]);
            if (d <= bd) {
                bd = d;
                best = i;
            }
        }
        if (best == b.size()) return false;
        used[best] = true;
    }
    return true;
}

inline std::vector<Complex> reals(std::initializer_list<double> xs)
{
    std::vector<Complex> out;
    for (double x : xs) out.emplace_back(x, 0.0);
    return out;
}

// Closed-form error trajectory e(t) = (C + D F) exp((A + B F) t) xi0 through
// the eigendecomposition of the closed loop (the library uses expm).
inline Matrix oracle_error_samples(const LtiSystem& sys, const Matrix& F, const Vector& xi0,
                                   const std::vector<double>& times)
{
    Matrix Acl = sys.A() + sys.B() * F;
    Eigen::EigenSolver<Matrix> es(Acl);
    CMatrix P = es.eigenvectors();
    CVector lam = es.eigenvalues();
    CVector alpha = P.partialPivLu().solve(xi0.cast<Complex>());
    Matrix Ccl = sys.C() + sys.D() * F;
    Matrix out(sys.p(), static_cast<Index>(times.size()));
    for (std::size_t k = 0; k < times.size(); ++k) {
        CVector xk = CVector::Zero(sys.n());
        for (Index i = 0; i < sys.n(); ++i) {
            Complex g = sys.domain() == TimeDomain::Continuous ? std::exp(lam(i) * times[k])
                                                               : std::pow(lam(i), times[k]);
            xk += P.col(i) * (g * alpha(i));
        }
        out.col(static_cast<Index>(k)) = Ccl * xk.real();
    }
    return out;
}

}  // namespace testsupport
