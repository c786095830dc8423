#include "monotrack/sysmodel.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "monotrack/errors.hpp"
#include "monotrack/random.hpp"

namespace monotrack {

const char* to_string(TimeDomain domain)
{
    return domain == TimeDomain::Continuous ? "continuous" : "discrete";
}

bool in_stability_region(Complex z, TimeDomain domain)
{
    if (domain == TimeDomain::Continuous) return z.real() < 0.0;
    return std::abs(z) < 1.0;
}

double tracking_frequency(TimeDomain domain)
{
    return domain == TimeDomain::Continuous ? 0.0 : 1.0;
}

namespace {

void check_dimensions(const Matrix& A, const Matrix& B, const Matrix& C, const Matrix& D)
{
    const Index n = A.rows();
    if (n == 0 || A.cols() != n) throw Error(ErrorCode::DimensionMismatch, "A must be square and nonempty");
    if (B.rows() != n || B.cols() == 0) throw Error(ErrorCode::DimensionMismatch, "B must have n rows and m >= 1 columns");
    if (C.cols() != n || C.rows() == 0) throw Error(ErrorCode::DimensionMismatch, "C must have n columns and p >= 1 rows");
    if (D.rows() != C.rows() || D.cols() != B.cols()) throw Error(ErrorCode::DimensionMismatch, "D must be p x m");
    for (const Matrix* M : {&A, &B, &C, &D})
        if (!M->allFinite()) throw Error(ErrorCode::InvalidArgument, "system matrices must be finite");
}

}  // namespace

LtiSystem::LtiSystem(RelaxedTag, Matrix A, Matrix B, Matrix C, Matrix D, TimeDomain domain)
    : A_(std::move(A)), B_(std::move(B)), C_(std::move(C)), D_(std::move(D)), domain_(domain)
{
    check_dimensions(A_, B_, C_, D_);
}

LtiSystem::LtiSystem(Matrix A, Matrix B, Matrix C, Matrix D, TimeDomain domain, const TolerancePolicy& tol)
    : LtiSystem(RelaxedTag{}, std::move(A), std::move(B), std::move(C), std::move(D), domain)
{
    Matrix BD(n() + p(), m());
    BD << B_, D_;
    if (rank_of(BD, tol) != m())
        throw Error(ErrorCode::InvalidArgument, "[B; D] must have full column rank");
    Matrix CD(p(), n() + m());
    CD << C_, D_;
    if (rank_of(CD, tol) != p())
        throw Error(ErrorCode::InvalidArgument, "[C D] must have full row rank");
}

LtiSystem LtiSystem::relaxed(Matrix A, Matrix B, Matrix C, Matrix D, TimeDomain domain)
{
    return LtiSystem(RelaxedTag{}, std::move(A), std::move(B), std::move(C), std::move(D), domain);
}

LtiSystem LtiSystem::without_output(Index j) const
{
    if (j < 0 || j >= p()) throw Error(ErrorCode::InvalidArgument, "output index out of range");
    if (p() == 1) {
        // A single zero output row imposes no constraint, which is what deleting
        // the only output means for the pencil relations.
        return relaxed(A_, B_, Matrix::Zero(1, n()), Matrix::Zero(1, m()), domain_);
    }
    Matrix C(p() - 1, n());
    Matrix D(p() - 1, m());
    for (Index i = 0, k = 0; i < p(); ++i) {
        if (i == j) continue;
        C.row(k) = C_.row(i);
        D.row(k) = D_.row(i);
        ++k;
    }
    return relaxed(A_, B_, std::move(C), std::move(D), domain_);
}

CMatrix rosenbrock(const LtiSystem& sys, Complex lambda)
{
    return rosenbrock(sys, 0.0).cast<Complex>() -
           lambda * [&] {
               CMatrix E = CMatrix::Zero(sys.n() + sys.p(), sys.n() + sys.m());
               E.topLeftCorner(sys.n(), sys.n()).setIdentity();
               return E;
           }();
}

Matrix rosenbrock(const LtiSystem& sys, double lambda)
{
    const Index n = sys.n();
    Matrix P(n + sys.p(), n + sys.m());
    P << sys.A() - lambda * Matrix::Identity(n, n), sys.B(), sys.C(), sys.D();
    return P;
}

namespace {

double system_scale(const LtiSystem& sys)
{
    return std::max(1.0, rosenbrock(sys, 0.0).cwiseAbs().maxCoeff());
}

// Finite generalized eigenvalues of a random square compression of the pencil.
std::vector<Complex> compressed_eigenvalues(const LtiSystem& sys, Index nr, Rng& rng)
{
    const Index rows = sys.n() + sys.p();
    const Index cols = sys.n() + sys.m();
    Matrix L(nr, rows);
    Matrix R(cols, nr);
    for (Index i = 0; i < L.size(); ++i) L.data()[i] = rng.uniform(-1.0, 1.0);
    for (Index i = 0; i < R.size(); ++i) R.data()[i] = rng.uniform(-1.0, 1.0);
    Matrix E = Matrix::Zero(rows, cols);
    E.topLeftCorner(sys.n(), sys.n()).setIdentity();
    const Matrix M0 = L * rosenbrock(sys, 0.0) * R;
    const Matrix M1 = L * E * R;
    Eigen::GeneralizedEigenSolver<Matrix> ges(M0, M1, false);
    std::vector<Complex> out;
    const auto& alphas = ges.alphas();
    const auto& betas = ges.betas();
    for (Index i = 0; i < alphas.size(); ++i) {
        const double b = std::abs(betas(i));
        const double a = std::abs(alphas(i));
        if (b > 1e-10 * std::max(a, b) && b > 0.0) out.push_back(alphas(i) / betas(i));
    }
    return out;
}

double relative_distance(Complex a, Complex b)
{
    return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

// Ratio sigma_nr / sigma_max of the pencil at z.
double rank_ratio(const LtiSystem& sys, Complex z, Index nr)
{
    const CMatrix P = rosenbrock(sys, z);
    Eigen::JacobiSVD<CMatrix> svd(P);
    const auto& s = svd.singularValues();
    if (s(0) == 0.0) return 0.0;
    if (nr - 1 >= s.size()) return 0.0;
    return s(nr - 1) / s(0);
}

bool less_by_parts(Complex a, Complex b)
{
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
}

}  // namespace

Index normal_rank(const LtiSystem& sys, const ZeroOptions& opts)
{
    Rng rng(opts.seed, 1);
    const double scale = system_scale(sys);
    Index best = 0;
    for (int k = 0; k < std::max(opts.rank_samples, 1); ++k) {
        const double re = rng.uniform(-1.0, 1.0) * scale;
        const double im = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.5, 1.5) * scale;
        best = std::max(best, rank_of(rosenbrock(sys, Complex(re, im)), opts.tol));
    }
    return best;
}

std::vector<InvariantZero> invariant_zeros(const LtiSystem& sys, const ZeroOptions& opts)
{
    const Index nr = normal_rank(sys, opts);
    if (nr == 0) return {};
    Rng rng(opts.seed, 2);
    const std::vector<Complex> first = compressed_eigenvalues(sys, nr, rng);
    const std::vector<Complex> second = compressed_eigenvalues(sys, nr, rng);

    const double match_tol = 10.0 * opts.cluster_tol;
    std::vector<Complex> confirmed;
    for (const Complex& c : first) {
        const bool in_second = std::any_of(second.begin(), second.end(),
                                           [&](Complex d) { return relative_distance(c, d) <= match_tol; });
        if (!in_second) continue;
        const double ratio = rank_ratio(sys, c, nr);
        if (ratio <= opts.tol.pencil_rank_tol) {
            confirmed.push_back(c);
        } else if (ratio < opts.reject_ratio) {
            throw Error(ErrorCode::IllConditionedPencil,
                        "cannot confirm or reject candidate zero (rank ratio " + std::to_string(ratio) + ")");
        }
    }

    std::sort(confirmed.begin(), confirmed.end(), less_by_parts);
    std::vector<std::vector<Complex>> clusters;
    for (const Complex& c : confirmed) {
        bool placed = false;
        for (auto& cl : clusters) {
            if (relative_distance(cl.front(), c) <= opts.cluster_tol) {
                cl.push_back(c);
                placed = true;
                break;
            }
        }
        if (!placed) clusters.push_back({c});
    }

    std::vector<InvariantZero> zeros;
    for (const auto& cl : clusters) {
        Complex mean(0.0, 0.0);
        for (const Complex& c : cl) mean += c;
        mean /= static_cast<double>(cl.size());
        if (std::abs(mean.imag()) <= 1e-8 * std::max(1.0, std::abs(mean))) mean = Complex(mean.real(), 0.0);
        InvariantZero z;
        z.value = mean;
        z.algebraic_multiplicity = static_cast<int>(cl.size());
        zeros.push_back(z);
    }

    // Conjugate closure: pair each upper-half zero with its mirror image.
    std::vector<InvariantZero> closed;
    std::vector<bool> used(zeros.size(), false);
    for (std::size_t i = 0; i < zeros.size(); ++i) {
        if (used[i]) continue;
        used[i] = true;
        InvariantZero z = zeros[i];
        if (z.value.imag() == 0.0) {
            closed.push_back(z);
            continue;
        }
        std::size_t partner = zeros.size();
        for (std::size_t k = 0; k < zeros.size(); ++k) {
            if (used[k]) continue;
            if (relative_distance(zeros[k].value, std::conj(z.value)) <= match_tol) {
                partner = k;
                break;
            }
        }
        Complex upper = z.value.imag() > 0.0 ? z.value : std::conj(z.value);
        if (partner < zeros.size()) {
            used[partner] = true;
            const Complex other = zeros[partner].value;
            upper = 0.5 * (upper + (other.imag() > 0.0 ? other : std::conj(other)));
            z.algebraic_multiplicity = std::max(z.algebraic_multiplicity, zeros[partner].algebraic_multiplicity);
        }
        InvariantZero up = z;
        up.value = upper;
        InvariantZero low = z;
        low.value = std::conj(upper);
        closed.push_back(up);
        closed.push_back(low);
    }

    const TolerancePolicy relaxed = opts.tol.pencil();
    for (auto& z : closed) {
        const Index r = z.value.imag() == 0.0 ? rank_of(rosenbrock(sys, z.value.real()), relaxed)
                                              : rank_of(rosenbrock(sys, z.value), relaxed);
        z.geometric_multiplicity = static_cast<int>(std::max<Index>(nr - r, 1));
        z.is_minimum_phase = in_stability_region(z.value, sys.domain());
    }
    std::sort(closed.begin(), closed.end(),
              [](const InvariantZero& a, const InvariantZero& b) { return less_by_parts(a.value, b.value); });
    return closed;
}

ZeroPartition classify_zeros(const std::vector<InvariantZero>& zeros, TimeDomain domain)
{
    ZeroPartition part;
    for (InvariantZero z : zeros) {
        z.is_minimum_phase = in_stability_region(z.value, domain);
        (z.is_minimum_phase ? part.minimum_phase : part.non_minimum_phase).push_back(z);
    }
    return part;
}

ZeroPartition classify_zeros(const LtiSystem& sys, const ZeroOptions& opts)
{
    return classify_zeros(invariant_zeros(sys, opts), sys.domain());
}

namespace {

bool pbh_full_rank(const LtiSystem& sys, Complex lambda, const TolerancePolicy& tol)
{
    const Index n = sys.n();
    CMatrix M(n, n + sys.m());
    M << sys.A().cast<Complex>() - lambda * CMatrix::Identity(n, n), sys.B().cast<Complex>();
    return rank_of(M, tol.pencil()) == n;
}

}  // namespace

std::vector<Complex> uncontrollable_modes(const LtiSystem& sys, const TolerancePolicy& tol)
{
    Eigen::EigenSolver<Matrix> es(sys.A(), false);
    std::vector<Complex> out;
    for (Index i = 0; i < es.eigenvalues().size(); ++i) {
        const Complex ev = es.eigenvalues()(i);
        if (pbh_full_rank(sys, ev, tol)) continue;
        const bool seen = std::any_of(out.begin(), out.end(), [&](Complex c) { return relative_distance(c, ev) < 1e-6; });
        if (!seen) out.push_back(ev);
    }
    std::sort(out.begin(), out.end(), less_by_parts);
    return out;
}

bool near_zero(Complex z, const std::vector<InvariantZero>& zeros, double radius)
{
    return std::any_of(zeros.begin(), zeros.end(),
                       [&](const InvariantZero& q) { return std::abs(q.value - z) <= radius * std::max(1.0, std::abs(z)); });
}

AssumptionReport audit_assumptions(const LtiSystem& sys, const ZeroOptions& opts)
{
    AssumptionReport rep;
    const Index nr = normal_rank(sys, opts);
    rep.right_invertible = nr == sys.n() + sys.p();
    rep.details.push_back("normal rank " + std::to_string(nr) + " of " + std::to_string(sys.n() + sys.p()));

    rep.stabilizable = true;
    Eigen::EigenSolver<Matrix> es(sys.A(), false);
    for (Index i = 0; i < es.eigenvalues().size(); ++i) {
        const Complex ev = es.eigenvalues()(i);
        if (in_stability_region(ev, sys.domain())) continue;
        if (!pbh_full_rank(sys, ev, opts.tol)) {
            rep.stabilizable = false;
            rep.details.push_back("uncontrollable mode outside the stability region at (" + std::to_string(ev.real()) +
                                  ", " + std::to_string(ev.imag()) + ")");
        }
    }
    if (rep.stabilizable) rep.details.push_back("stabilizable");

    const double f = tracking_frequency(sys.domain());
    rep.no_zero_at_tracking_frequency = rank_of(rosenbrock(sys, f), opts.tol.pencil()) == sys.n() + sys.p();
    rep.details.push_back(rep.no_zero_at_tracking_frequency ? "no invariant zero at the tracking frequency"
                                                            : "invariant zero at the tracking frequency");

    try {
        const auto zeros = invariant_zeros(sys, opts);
        const auto part = classify_zeros(zeros, sys.domain());
        rep.distinct_min_phase_zeros = true;
        for (std::size_t i = 0; i < part.minimum_phase.size(); ++i) {
            const auto& z = part.minimum_phase[i];
            if (z.geometric_multiplicity != 1 || z.algebraic_multiplicity != 1) rep.distinct_min_phase_zeros = false;
            for (std::size_t k = i + 1; k < part.minimum_phase.size(); ++k)
                if (relative_distance(z.value, part.minimum_phase[k].value) <= opts.cluster_tol)
                    rep.distinct_min_phase_zeros = false;
        }
        rep.details.push_back(std::to_string(part.minimum_phase.size()) + " minimum-phase zero(s), " +
                              (rep.distinct_min_phase_zeros ? "all simple" : "some coincident or repeated"));
    } catch (const Error& e) {
        rep.distinct_min_phase_zeros = false;
        rep.details.push_back(std::string("zero computation failed: ") + e.what());
    }
    return rep;
}

}  // namespace monotrack
