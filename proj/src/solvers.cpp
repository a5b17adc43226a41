#include "maglap/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>
#include <Eigen/OrderingMethods>
#include <Eigen/SparseCholesky>

#include "maglap/errors.hpp"
#include "maglap/rng.hpp"

namespace maglap {

namespace {

using ColMatrix = Eigen::SparseMatrix<Complex>;
using Ldlt = Eigen::SimplicialLDLT<ColMatrix, Eigen::Lower, Eigen::AMDOrdering<int>>;

constexpr double kSingularShift = 1e-12;

Vector random_vector(int n, CounterRng& rng)
{
    Vector v(n);
    for (int i = 0; i < n; ++i) {
        v(i) = Complex(2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0);
    }
    return v;
}

SparseMatrix add_identity(const SparseMatrix& m, double s)
{
    SparseMatrix id(m.rows(), m.cols());
    id.setIdentity();
    return SparseMatrix(m + s * id);
}

double gershgorin_bound(const SparseMatrix& a)
{
    double best = 0.0;
    for (int r = 0; r < a.outerSize(); ++r) {
        double row = 0.0;
        for (SparseMatrix::InnerIterator it(a, r); it; ++it) {
            row += std::abs(it.value());
        }
        best = std::max(best, row);
    }
    return best;
}

bool ldlt_nonsingular(const Ldlt& f)
{
    if (f.info() != Eigen::Success) {
        return false;
    }
    const Eigen::VectorXd d = f.vectorD().real();
    if (d.size() == 0) {
        return true;
    }
    return d.minCoeff() > 1e-12 * std::max(1.0, d.cwiseAbs().maxCoeff());
}

// Unit phase making the first largest-modulus entry real and positive.
Complex canonical_phase(const Vector& f)
{
    int best = 0;
    double mod = -1.0;
    for (int i = 0; i < f.size(); ++i) {
        if (std::abs(f(i)) > mod * (1.0 + 1e-12)) {
            mod = std::abs(f(i));
            best = i;
        }
    }
    if (mod <= 0.0) {
        return 1.0;
    }
    return std::conj(f(best)) / mod;
}

} // namespace

struct SparsePreconditioner::Impl {
    Ldlt ldlt;
};

SparsePreconditioner::SparsePreconditioner(const SparseMatrix& m) : impl_(std::make_unique<Impl>())
{
    ColMatrix a(m);
    impl_->ldlt.compute(a);
    if (!ldlt_nonsingular(impl_->ldlt)) {
        ColMatrix id(a.rows(), a.cols());
        id.setIdentity();
        a += kSingularShift * id;
        impl_->ldlt.compute(a);
        shifted_ = true;
        if (impl_->ldlt.info() != Eigen::Success) {
            throw SingularSystem("sparse LDL factorization failed after the 1e-12 shift");
        }
    }
}

SparsePreconditioner::~SparsePreconditioner() = default;

Vector SparsePreconditioner::apply(const Vector& r) const { return impl_->ldlt.solve(r); }

std::unique_ptr<Preconditioner> make_sparsifier_preconditioner(const ConnectionGraph& g, const SparsifierBatch& batch)
{
    const auto coeff = sparsifier_coefficients(batch, batch.kind);
    if (batch.t() == 1) {
        std::vector<double> scale(static_cast<std::size_t>(g.edge_count()), 0.0);
        for (auto [e, c] : coeff) {
            scale[static_cast<std::size_t>(e)] = c;
        }
        try {
            return std::make_unique<MtsfPreconditioner>(cholesky_mtsf(g, batch.samples.front(), batch.q, scale));
        } catch (const SingularSystem&) {
            // Spanning tree at q = 0: fall through to the shifted sparse factor.
        }
    }
    return std::make_unique<SparsePreconditioner>(add_identity(assemble_edge_laplacian(g, coeff, true), batch.q));
}

PcgResult pcg_solve(const SparseMatrix& a, const Preconditioner& m, const Vector& b, double tol, int max_iterations)
{
    const int n = static_cast<int>(a.rows());
    if (b.size() != n) {
        throw InvalidInput("right-hand side has length " + std::to_string(b.size()) + ", expected " + std::to_string(n));
    }
    PcgResult out;
    out.x = Vector::Zero(n);
    const double bnorm = b.norm();
    out.residuals.push_back(bnorm > 0.0 ? 1.0 : 0.0);
    if (bnorm == 0.0) {
        out.converged = true;
        return out;
    }
    Vector r = b;
    Vector z = m.apply(r);
    Vector p = z;
    double rz = r.dot(z).real();
    for (int k = 1; k <= max_iterations; ++k) {
        const Vector ap = a * p;
        const double curvature = p.dot(ap).real();
        if (!(curvature > 0.0)) {
            throw InvalidInput("CG met nonpositive curvature at iteration " + std::to_string(k) +
                               ": the operator is not positive definite");
        }
        const double alpha = rz / curvature;
        out.x += alpha * p;
        r -= alpha * ap;
        const double rel = r.norm() / bnorm;
        out.residuals.push_back(rel);
        out.iterations = k;
        if (rel <= tol) {
            out.converged = true;
            break;
        }
        z = m.apply(r);
        const double rz_next = r.dot(z).real();
        p = z + (rz_next / rz) * p;
        rz = rz_next;
    }
    return out;
}

CondEstimate cond_estimate(const SparseMatrix& a, const Preconditioner& b, CondOptions options)
{
    const int n = static_cast<int>(a.rows());
    if (n == 0) {
        return {};
    }
    CounterRng rng(options.seed);
    const int cap = std::min(n, options.max_iterations);
    Eigen::MatrixXcd v(n, cap + 1);
    Eigen::MatrixXcd av(n, cap + 1);

    Vector x = random_vector(n, rng);
    Vector ax = a * x;
    double nrm = std::sqrt(x.dot(ax).real());
    if (!(nrm > 0.0)) {
        throw SingularSystem("A is not positive definite");
    }
    v.col(0) = x / nrm;
    av.col(0) = ax / nrm;
    std::vector<double> alpha;
    std::vector<double> beta;

    CondEstimate out;
    for (int j = 0; j < cap; ++j) {
        Vector w = b.apply(av.col(j));
        const double aj = av.col(j).dot(w).real();
        alpha.push_back(aj);
        // Full reorthogonalization in the A-inner product, applied twice.
        for (int pass = 0; pass < 2; ++pass) {
            const Eigen::VectorXcd c = av.leftCols(j + 1).adjoint() * w;
            w -= v.leftCols(j + 1) * c;
        }
        const Vector aw = a * w;
        const double bj = std::sqrt(std::max(0.0, w.dot(aw).real()));
        const int k = j + 1;
        const bool exhausted = bj <= 1e-14 * std::abs(aj) || k == n;
        out.iterations = k;

        if (exhausted || k % 5 == 0 || k == cap) {
            Eigen::VectorXd diag = Eigen::Map<const Eigen::VectorXd>(alpha.data(), k);
            Eigen::VectorXd sub = Eigen::Map<const Eigen::VectorXd>(beta.data(), k - 1);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
            es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
            const double lo = es.eigenvalues()(0);
            const double hi = es.eigenvalues()(k - 1);
            const double rlo = bj * std::abs(es.eigenvectors()(k - 1, 0));
            const double rhi = bj * std::abs(es.eigenvectors()(k - 1, k - 1));
            if (!(lo > 0.0)) {
                throw SingularSystem("preconditioned operator has a nonpositive Ritz value");
            }
            out.lambda_min = lo;
            out.lambda_max = hi;
            out.cond = hi / lo;
            if (exhausted || (rlo <= options.tol * lo && rhi <= options.tol * hi)) {
                return out;
            }
        }
        if (k == cap) {
            break;
        }
        beta.push_back(bj);
        v.col(k) = w / bj;
        av.col(k) = aw / bj;
    }
    throw NonConvergence("Lanczos condition estimate did not converge in " + std::to_string(out.iterations) +
                         " iterations (current estimate " + std::to_string(out.cond) + ")");
}

EigenResult least_eigenpair(const SparseMatrix& delta, const Preconditioner* precond, std::optional<double> shift,
                            EigenOptions options)
{
    const int n = static_cast<int>(delta.rows());
    if (n == 0) {
        throw InvalidInput("empty matrix");
    }
    EigenResult out;
    out.norm_bound = gershgorin_bound(delta);
    const double scale = out.norm_bound > 0.0 ? out.norm_bound : 1.0;
    const double safe_shift = -1e-6 * scale;
    double sigma = shift.value_or(safe_shift);
    const int block = std::min(3, n);

    Ldlt direct;
    auto factor = [&] {
        if (precond == nullptr) {
            direct.compute(ColMatrix(add_identity(delta, -sigma)));
            if (direct.info() != Eigen::Success) {
                throw SingularSystem("factorization of Δ - σI failed");
            }
        }
    };
    factor();

    SparseMatrix shifted = add_identity(delta, -sigma);
    auto solve = [&](const Eigen::MatrixXcd& rhs) {
        if (precond == nullptr) {
            return Eigen::MatrixXcd(direct.solve(rhs));
        }
        Eigen::MatrixXcd y(n, rhs.cols());
        for (int c = 0; c < rhs.cols(); ++c) {
            const PcgResult r = pcg_solve(shifted, *precond, rhs.col(c), options.inner_tol, 20 * n + 100);
            out.inner_iterations += r.iterations;
            y.col(c) = r.x;
        }
        return y;
    };

    CounterRng rng(options.seed);
    Eigen::MatrixXcd x(n, block);
    for (int c = 0; c < block; ++c) {
        x.col(c) = random_vector(n, rng);
    }
    for (int it = 1; it <= options.max_iterations; ++it) {
        Eigen::MatrixXcd y;
        try {
            y = solve(x);
        } catch (const InvalidInput&) {
            if (precond == nullptr || sigma == safe_shift) {
                throw;
            }
            sigma = safe_shift;
            shifted = add_identity(delta, -sigma);
            y = solve(x);
        }
        Eigen::HouseholderQR<Eigen::MatrixXcd> qr(y);
        const Eigen::MatrixXcd q = qr.householderQ() * Eigen::MatrixXcd::Identity(n, block);
        const Eigen::MatrixXcd dq = delta * q;
        Eigen::MatrixXcd h = q.adjoint() * dq;
        h = 0.5 * (h + h.adjoint()).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
        x = q * es.eigenvectors();
        const Eigen::MatrixXcd dx = dq * es.eigenvectors();
        const double theta = es.eigenvalues()(0);
        const double res = (dx.col(0) - theta * x.col(0)).norm();
        // A Ritz gap below 1e-6‖Δ‖ is only trusted once the second pair has settled too.
        const double res2 = block > 1 ? (dx.col(1) - es.eigenvalues()(1) * x.col(1)).norm() : 0.0;
        const bool separated = block == 1 || es.eigenvalues()(1) - theta >= 1e-6 * scale;
        out.iterations = it;
        out.lambda = theta;
        out.residual = res;
        out.gap = block > 1 ? es.eigenvalues()(1) - theta : std::numeric_limits<double>::infinity();
        if (res <= options.residual_tol * scale && (separated || res2 <= options.residual_tol * scale)) {
            out.degenerate = out.gap <= options.degeneracy_tol * scale;
            Vector f = x.col(0);
            f *= canonical_phase(f) * (std::sqrt(static_cast<double>(n)) / f.norm());
            out.vector = std::move(f);
            return out;
        }
    }
    throw NonConvergence("least eigenpair did not converge in " + std::to_string(options.max_iterations) +
                         " iterations (residual " + std::to_string(out.residual) + ")");
}

std::optional<double> davis_kahan_bound(double lambda_n, double delta_star, double epsilon, int n)
{
    const double num = epsilon * lambda_n;
    if (!(num < delta_star)) {
        return std::nullopt;
    }
    return std::sqrt(2.0 * n) * num / (delta_star - num);
}

double line_distance(const Vector& f, const Vector& g)
{
    const double d2 = f.squaredNorm() + g.squaredNorm() - 2.0 * std::abs(f.dot(g));
    return std::sqrt(std::max(0.0, d2));
}

SslResult ssl_solve(const ConnectionGraph& g, double q, const Vector& y, SslOptions options)
{
    if (!(q > 0.0) || !std::isfinite(q)) {
        throw InvalidInput("ssl_solve needs q > 0");
    }
    const int n = g.node_count();
    if (y.size() != n) {
        throw InvalidInput("label vector has length " + std::to_string(y.size()) + ", expected " + std::to_string(n));
    }
    const ConnectionGraph unit = with_unit_weights(g);
    auto samples = sample_batch(unit, q, options.batch, {WeightMode::capped}, options.seed);
    LeverageScores ls;
    ls.method = LsMethod::uniform;
    ls.q = q;
    ls.values.assign(static_cast<std::size_t>(g.edge_count()), 1.0);
    const SparsifierBatch batch = make_batch(std::move(samples), std::move(ls), q);
    const auto m = make_sparsifier_preconditioner(g, batch);
    const SparseMatrix a = assemble_magnetic_laplacian(g, q).regularized();
    const Vector rhs = q * y;
    PcgResult r = pcg_solve(a, *m, rhs, options.tol, options.max_iterations);
    if (!r.converged) {
        throw NonConvergence("SSL solve stopped at residual " + std::to_string(r.residuals.back()));
    }
    SslResult out;
    out.iterations = r.iterations;
    const double rn = rhs.norm();
    out.residual = rn > 0.0 ? (a * r.x - rhs).norm() / rn : 0.0;
    out.f = std::move(r.x);
    return out;
}

PrecondReport precond_report(const SparseMatrix& a, const Preconditioner& m, const Vector& b, double tol,
                             int max_iterations)
{
    PrecondReport out;
    out.cond = cond_estimate(a, m);
    const IdentityPreconditioner id;
    PcgResult plain = pcg_solve(a, id, b, tol, max_iterations);
    PcgResult pre = pcg_solve(a, m, b, tol, max_iterations);
    out.iterations_plain = plain.iterations;
    out.iterations_preconditioned = pre.iterations;
    out.residuals_plain = std::move(plain.residuals);
    out.residuals_preconditioned = std::move(pre.residuals);
    return out;
}

} // namespace maglap
