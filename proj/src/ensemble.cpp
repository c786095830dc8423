#include "monotrack/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>

#include <Eigen/Eigenvalues>

#include "monotrack/errors.hpp"

namespace monotrack {

namespace {

struct Blocks {
    Matrix A, B, C, D;
};

Matrix normal_matrix(Index rows, Index cols, Rng& rng)
{
    Matrix M(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) M(i, j) = rng.normal();
    return M;
}

double draw_pole(TimeDomain domain, Complex avoid, Rng& rng)
{
    for (;;) {
        const double a = domain == TimeDomain::Continuous ? rng.uniform(-3.0, -0.5) : rng.uniform(0.1, 0.8);
        if (std::abs(Complex(a, 0.0) - avoid) > 0.1) return a;
    }
}

// Cascade (s - z)/(s - a) on output channel k.
Blocks add_real_zero(const Blocks& s, Index k, double z, double a)
{
    const Index n = s.A.rows();
    Blocks out;
    out.A = Matrix::Zero(n + 1, n + 1);
    out.A.topLeftCorner(n, n) = s.A;
    out.A.block(n, 0, 1, n) = s.C.row(k);
    out.A(n, n) = a;
    out.B.resize(n + 1, s.B.cols());
    out.B << s.B, s.D.row(k);
    out.C = Matrix::Zero(s.C.rows(), n + 1);
    out.C.leftCols(n) = s.C;
    out.C(k, n) = a - z;
    out.D = s.D;
    return out;
}

// Cascade (s - z)(s - conj z)/((s - a1)(s - a2)) on output channel k.
Blocks add_complex_zero(const Blocks& s, Index k, Complex z, double a1, double a2)
{
    const Index n = s.A.rows();
    Matrix Af(2, 2);
    Af << 0.0, 1.0, -a1 * a2, a1 + a2;
    Vector Bf(2);
    Bf << 0.0, 1.0;
    Eigen::RowVector2d Cf(std::norm(z) - a1 * a2, a1 + a2 - 2.0 * z.real());
    Blocks out;
    out.A = Matrix::Zero(n + 2, n + 2);
    out.A.topLeftCorner(n, n) = s.A;
    out.A.block(n, 0, 2, n) = Bf * s.C.row(k);
    out.A.bottomRightCorner(2, 2) = Af;
    out.B.resize(n + 2, s.B.cols());
    out.B << s.B, Bf * s.D.row(k);
    out.C = Matrix::Zero(s.C.rows(), n + 2);
    out.C.leftCols(n) = s.C;
    out.C.block(k, n, 1, 2) = Cf;
    out.D = s.D;
    return out;
}

Blocks add_uncontrollable(const Blocks& s, double mu, Rng& rng)
{
    const Index n = s.A.rows();
    Blocks out;
    out.A = Matrix::Zero(n + 1, n + 1);
    out.A(0, 0) = mu;
    out.A.block(1, 0, n, 1) = normal_matrix(n, 1, rng);
    out.A.bottomRightCorner(n, n) = s.A;
    out.B = Matrix::Zero(n + 1, s.B.cols());
    out.B.bottomRows(n) = s.B;
    out.C.resize(s.C.rows(), n + 1);
    out.C << normal_matrix(s.C.rows(), 1, rng), s.C;
    out.D = s.D;
    return out;
}

bool contains(const std::vector<Complex>& xs, Complex z)
{
    return std::any_of(xs.begin(), xs.end(),
                       [&](Complex x) { return std::abs(x - z) <= 1e-6 * std::max(1.0, std::abs(z)); });
}

}  // namespace

LtiSystem generate(const GeneratorSpec& spec)
{
    if (spec.n < 1 || spec.m < 1 || spec.p < 1) throw Error(ErrorCode::InvalidArgument, "dimensions must be positive");
    if (spec.m < spec.p) throw Error(ErrorCode::InvalidArgument, "generator requires m >= p");
    if (spec.feedthrough_rows < 0 || spec.feedthrough_rows > spec.p)
        throw Error(ErrorCode::InvalidArgument, "feedthrough rows must lie in [0, p]");
    for (const Complex& z : spec.planted_zero_values) {
        if (z.imag() != 0.0 && !contains(spec.planted_zero_values, std::conj(z)))
            throw Error(ErrorCode::InvalidArgument, "planted zeros must be closed under conjugation");
    }
    for (double mu : spec.planted_uncontrollable_modes)
        if (!std::isfinite(mu) || !in_stability_region(mu, spec.domain))
            throw Error(ErrorCode::InvalidArgument, "planted uncontrollable modes must be stable");

    std::vector<Complex> modes;
    for (double mu : spec.planted_uncontrollable_modes) modes.emplace_back(mu, 0.0);
    std::vector<Complex> filters;
    Index extra = static_cast<Index>(modes.size());
    for (const Complex& z : spec.planted_zero_values) {
        if (z.imag() < 0.0) continue;
        if (z.imag() == 0.0 && contains(modes, z)) continue;
        filters.push_back(z);
        extra += z.imag() == 0.0 ? 1 : 2;
    }
    const Index n_base = spec.n - extra;
    if (n_base < 1) throw Error(ErrorCode::InvalidArgument, "planted structure leaves no room for the base plant");

    for (int attempt = 0; attempt < spec.max_attempts; ++attempt) {
        Rng rng(spec.seed, static_cast<std::uint64_t>(attempt));
        Blocks s;
        s.A = normal_matrix(n_base, n_base, rng);
        Eigen::EigenSolver<Matrix> es(s.A, false);
        if (spec.domain == TimeDomain::Continuous) {
            double top = es.eigenvalues().real().maxCoeff();
            s.A -= (top + rng.uniform(0.3, 1.0)) * Matrix::Identity(n_base, n_base);
        } else {
            double radius = es.eigenvalues().cwiseAbs().maxCoeff();
            if (radius > 0.0) s.A *= rng.uniform(0.5, 0.9) / radius;
        }
        s.B = normal_matrix(n_base, spec.m, rng);
        s.C = normal_matrix(spec.p, n_base, rng);
        s.D = Matrix::Zero(spec.p, spec.m);
        if (spec.feedthrough_rows > 0) s.D.topRows(spec.feedthrough_rows) = normal_matrix(spec.feedthrough_rows, spec.m, rng);

        Index channel = 0;
        for (const Complex& z : filters) {
            if (z.imag() == 0.0) {
                s = add_real_zero(s, channel, z.real(), draw_pole(spec.domain, z, rng));
            } else {
                const double a1 = draw_pole(spec.domain, z, rng);
                const double a2 = draw_pole(spec.domain, z, rng);
                s = add_complex_zero(s, channel, z, a1, a2);
            }
            channel = (channel + 1) % spec.p;
        }
        for (double mu : spec.planted_uncontrollable_modes) s = add_uncontrollable(s, mu, rng);

        const Eigen::HouseholderQR<Matrix> qr(normal_matrix(spec.n, spec.n, rng));
        const Matrix T = qr.householderQ();
        s.A = T.transpose() * s.A * T;
        s.B = T.transpose() * s.B;
        s.C = s.C * T;

        try {
            LtiSystem sys(s.A, s.B, s.C, s.D, spec.domain);
            if (!audit_assumptions(sys).all_pass()) continue;
            std::vector<Complex> zs;
            for (const auto& z : invariant_zeros(sys)) zs.push_back(z.value);
            bool planted = std::all_of(spec.planted_zero_values.begin(), spec.planted_zero_values.end(),
                                       [&](Complex z) { return contains(zs, z); });
            const auto unc = uncontrollable_modes(sys);
            planted = planted && std::all_of(modes.begin(), modes.end(), [&](Complex mu) { return contains(unc, mu); });
            if (planted) return sys;
        } catch (const Error&) {
            continue;
        }
    }
    throw Error(ErrorCode::GenerationFailed,
                "no admissible system after " + std::to_string(spec.max_attempts) + " attempts");
}

GenericityStats genericity_trial(const LtiSystem& sys, const std::vector<double>& lambdas, int trials,
                                 std::uint64_t base_seed, const SubspaceOptions& opts)
{
    GenericityStats stats;
    const auto zeros = invariant_zeros(sys, opts.zeros);
    const auto pool = default_pool(sys.domain(), static_cast<std::size_t>(sys.n() + 2), zeros, opts.exclusion_radius);
    const PairedBasis vg0 = vstar_g(sys, pool, opts);
    const auto verdict = check_generalized(sys, vg0.basis(), lambdas, rstar_j_at(sys, lambdas, opts), opts);
    const std::vector<Index> delta = verdict.delta ? *verdict.delta : std::vector<Index>{};

    for (int i = 0; i < trials; ++i) {
        const std::uint64_t seed = base_seed + static_cast<std::uint64_t>(i);
        SubspaceOptions o = opts;
        o.seed = seed;
        bool ok = true;

        try {
            const PairedBasis r = rstar(sys, std::nullopt, pool, o);
            if (r.draws > 1) {
                stats.rstar_rank_deficient += r.draws - 1;
                ok = false;
            }
        } catch (const Error& e) {
            if (e.code() != ErrorCode::RankDeficientAfterRetries) throw;
            stats.rstar_rank_deficient += o.max_retries + 1;
            ok = false;
        }

        PairedBasis vg;
        try {
            SubspaceOptions lit = o;
            lit.order = VgOrder::PoolFirst;
            vg = vstar_g(sys, pool, lit);
            if (vg.draws > 1) {
                stats.vstar_g_rank_deficient += vg.draws - 1;
                ok = false;
            }
        } catch (const Error& e) {
            if (e.code() != ErrorCode::RankDeficientAfterRetries) throw;
            stats.vstar_g_rank_deficient += o.max_retries + 1;
            ok = false;
        }

        if (verdict.solvable) {
            Rng rng(seed, 600);
            Matrix V(sys.n(), static_cast<Index>(delta.size()) + vg.dim());
            for (std::size_t k = 0; k < delta.size(); ++k) {
                const Index j = delta[k];
                V.col(static_cast<Index>(k)) =
                    random_direction(sys, j, lambdas[static_cast<std::size_t>(j)], rng, o).v;
            }
            V.rightCols(vg.dim()) = vg.V;
            if (V.cols() != sys.n() || rank_of(V, o.tol.structural()) != sys.n()) {
                ++stats.direction_rank_deficient;
                ok = false;
            }

            SynthesisSpec spec;
            spec.lambdas = lambdas;
            spec.reference = Vector::Ones(sys.p());
            spec.seed = seed;
            spec.subspace = opts;
            try {
                synthesize(sys, spec);
            } catch (const Error&) {
                ++stats.synthesis_failures;
                ok = false;
            }
        } else {
            ++stats.synthesis_failures;
            ok = false;
        }

        ++stats.trials;
        if (ok) ++stats.full_rank_successes;
        else stats.failing_seeds.push_back(seed);
    }
    return stats;
}

std::string fixture_hash(const LtiSystem& sys)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto feed = [&](const void* data, std::size_t len) {
        const auto* bytes = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; ++i) {
            h ^= bytes[i];
            h *= 0x100000001b3ULL;
        }
    };
    const unsigned char tag = sys.domain() == TimeDomain::Continuous ? 'c' : 'd';
    feed(&tag, 1);
    for (const Matrix* M : {&sys.A(), &sys.B(), &sys.C(), &sys.D()}) {
        const std::int64_t dims[2] = {M->rows(), M->cols()};
        feed(dims, sizeof(dims));
        for (Index i = 0; i < M->rows(); ++i)
            for (Index j = 0; j < M->cols(); ++j) {
                const double x = (*M)(i, j);
                feed(&x, sizeof(x));
            }
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace monotrack
