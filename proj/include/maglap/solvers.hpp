#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "maglap/graph.hpp"
#include "maglap/sparsifier.hpp"

namespace maglap {

/// z = M⁻¹ r for a Hermitian positive definite M.
class Preconditioner {
public:
    virtual ~Preconditioner() = default;
    virtual Vector apply(const Vector& r) const = 0;
    virtual std::string name() const = 0;
};

class IdentityPreconditioner final : public Preconditioner {
public:
    Vector apply(const Vector& r) const override { return r; }
    std::string name() const override { return "identity"; }
};

/// Single-MTSF factor from cholesky_mtsf.
class MtsfPreconditioner final : public Preconditioner {
public:
    explicit MtsfPreconditioner(CholeskyFactor factor) : factor_(std::move(factor)) {}
    Vector apply(const Vector& r) const override { return solve_factored(factor_, r); }
    std::string name() const override { return "mtsf-cholesky"; }
    const CholeskyFactor& factor() const noexcept { return factor_; }

private:
    CholeskyFactor factor_;
};

/// Sparse LDLᴴ with approximate minimum degree ordering. A numerically singular
/// matrix is replaced by M + 1e-12 I.
class SparsePreconditioner final : public Preconditioner {
public:
    explicit SparsePreconditioner(const SparseMatrix& m);
    ~SparsePreconditioner() override;
    Vector apply(const Vector& r) const override;
    std::string name() const override { return "sparse-ldlt"; }
    bool shifted() const noexcept { return shifted_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    bool shifted_ = false;
};

/// Δ̃ + qI for the batch: the MTSF factor when t = 1 (and it is nonsingular), otherwise
/// a sparse factorization of the assembled sparsifier.
std::unique_ptr<Preconditioner> make_sparsifier_preconditioner(const ConnectionGraph& g, const SparsifierBatch& batch);

struct PcgResult {
    Vector x;
    int iterations = 0;
    bool converged = false;
    /// ‖b - A x_k‖ / ‖b‖ for k = 0..iterations.
    std::vector<double> residuals;
};

/// Preconditioned CG for Hermitian positive definite `a`. Throws InvalidInput naming the
/// iteration when a direction of nonpositive curvature appears.
PcgResult pcg_solve(const SparseMatrix& a, const Preconditioner& m, const Vector& b, double tol = 1e-10,
                    int max_iterations = 10000);

struct CondOptions {
    double tol = 1e-6;
    int max_iterations = 2000;
    std::uint64_t seed = 0x636f6e64;
};

struct CondEstimate {
    double cond = 1.0;
    double lambda_min = 1.0;
    double lambda_max = 1.0;
    int iterations = 0;
};

/// Extremal eigenvalues of B⁻¹A by Lanczos in the A-inner product with full
/// reorthogonalization; both Ritz residuals end below tol relative. Throws NonConvergence.
CondEstimate cond_estimate(const SparseMatrix& a, const Preconditioner& b, CondOptions options = {});

struct EigenOptions {
    double residual_tol = 1e-8;
    double degeneracy_tol = 1e-10;
    int max_iterations = 500;
    /// Inner PCG tolerance when a preconditioner drives the shifted solves.
    double inner_tol = 1e-12;
    std::uint64_t seed = 0x6569676e;
};

struct EigenResult {
    double lambda = 0.0;
    /// ‖f‖ = √n, largest-modulus entry (lowest index first) real and positive.
    Vector vector;
    /// ‖Δf - λf‖ / ‖f‖.
    double residual = 0.0;
    /// Gershgorin bound on ‖Δ‖ used for the tolerances.
    double norm_bound = 0.0;
    /// Second Ritz value minus the first.
    double gap = 0.0;
    bool degenerate = false;
    int iterations = 0;
    int inner_iterations = 0;
};

/// Least eigenpair of Hermitian PSD Δ by block shifted inverse iteration with Rayleigh-Ritz.
/// The shift is `shift` when given, else -1e-6‖Δ‖. Without a preconditioner Δ - σI is
/// factored directly; with one, the shifted systems are solved by PCG, falling back to
/// -1e-6‖Δ‖ if Δ - σI turns out indefinite. Stops at ‖Δf - λf‖ ≤ residual_tol·‖Δ‖‖f‖; when the
/// first Ritz gap is below 1e-6‖Δ‖ the second Ritz pair must meet the same residual.
EigenResult least_eigenpair(const SparseMatrix& delta, const Preconditioner* precond = nullptr,
                            std::optional<double> shift = std::nullopt, EigenOptions options = {});

/// √(2n)·ελ_n/(δ* - ελ_n); nullopt when ελ_n ≥ δ*.
std::optional<double> davis_kahan_bound(double lambda_n, double delta_star, double epsilon, int n);

/// min over unit phases c of ‖f - c g‖ for vectors of equal norm.
double line_distance(const Vector& f, const Vector& g);

struct SslOptions {
    int batch = 1;
    std::uint64_t seed = 0;
    double tol = 1e-8;
    int max_iterations = 10000;
};

struct SslResult {
    Vector f;
    int iterations = 0;
    double residual = 0.0;
};

/// Solves (Δ + qI) f = q y by PCG, preconditioned by a sparsifier built from `batch`
/// capped-mode MTSFs of the unit-weight graph with uniform scores. Rejects q ≤ 0.
SslResult ssl_solve(const ConnectionGraph& g, double q, const Vector& y, SslOptions options = {});

struct PrecondReport {
    CondEstimate cond;
    int iterations_plain = 0;
    int iterations_preconditioned = 0;
    std::vector<double> residuals_plain;
    std::vector<double> residuals_preconditioned;
};

/// Condition estimate of M⁻¹A plus CG runs on A x = b with and without M.
PrecondReport precond_report(const SparseMatrix& a, const Preconditioner& m, const Vector& b, double tol = 1e-8,
                             int max_iterations = 10000);

} // namespace maglap
