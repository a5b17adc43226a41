#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "maglap/graph.hpp"
#include "maglap/leverage.hpp"
#include "maglap/sampler.hpp"

namespace maglap {

enum class EstimatorKind { plain, self_normalized };

/// t independent MTSFs together with the scores used to reweight them.
struct SparsifierBatch {
    std::vector<Mtsf> samples;
    LeverageScores ls;
    double q = 0.0;
    EstimatorKind kind = EstimatorKind::plain;
    /// w(F_ℓ) = Π max(1, 1 - cos θ); all ones for the plain estimator.
    std::vector<double> importance;
    /// (edge, n(e)) over the union of the samples, sorted by edge id.
    std::vector<std::pair<int, int>> multiplicity;

    int t() const noexcept { return static_cast<int>(samples.size()); }
    /// Σ_ℓ |F_ℓ| = Σ_e n(e).
    std::size_t total_edges() const noexcept;
};

/// Throws InvalidInput for t = 0 or scores of the wrong length.
SparsifierBatch make_batch(std::vector<Mtsf> samples, LeverageScores ls, double q,
                           EstimatorKind kind = EstimatorKind::plain);

/// Replicate ℓ draws from stream split(ℓ) of `seed`, so results do not depend on scheduling.
/// `threads` > 1 spreads replicates over a worker pool.
std::vector<Mtsf> sample_batch(const ConnectionGraph& g, double q, int t, CyclePoppingOptions options,
                               std::uint64_t seed, WalkStats* stats = nullptr, int threads = 1);

/// t uniform spanning trees (Wilson), same stream layout as sample_batch.
std::vector<Mtsf> sample_spanning_trees(const ConnectionGraph& g, int t, std::uint64_t seed,
                                        WalkStats* stats = nullptr);

/// Coefficients c_e with Δ̃ = Σ_e c_e w_e b_e b_e^*:
/// plain c_e = (1/t) Σ_ℓ [e ∈ F_ℓ] / l_ℓ(e), self-normalized c_e = Σ_ℓ w_ℓ [e ∈ F_ℓ] / l_ℓ(e) / Σ_ℓ w_ℓ.
/// Throws InvalidInput when a sampled edge has a zero score.
std::vector<std::pair<int, double>> sparsifier_coefficients(const SparsifierBatch& batch, EstimatorKind kind);

/// (1/t) Σ_ℓ Δ̃(F_ℓ), entry weights w_e n(e) / (t l(e)).
MagneticLaplacian build_sparsifier(const ConnectionGraph& g, const SparsifierBatch& batch);

/// Σ_ℓ w(F_ℓ) Δ̃(F_ℓ) / Σ_ℓ w(F_ℓ).
MagneticLaplacian build_self_normalized(const ConnectionGraph& g, const SparsifierBatch& batch);

/// I.i.d. baseline: `draws` edges, each contributing (Σ l / (s l_e)) w_e b_e b_e^* with s = |draws|.
MagneticLaplacian build_iid_sparsifier(const ConnectionGraph& g, std::span<const int> draws,
                                       std::span<const double> scores, double q);

/// ⌈(37κ/ε²) · max(2 log(4 d_eff / (δκ)), √3)⌉.
std::int64_t batch_size_bound(double d_eff, double kappa, double epsilon, double delta);

/// Asymptotic confidence radius z·sqrt(ω_t / t) for the self-normalized estimator in
/// Frobenius norm, with ω_t = (mean w²)/(mean w)² · (m + d_eff)² and z the `confidence`
/// quantile of the norm of a standard Gaussian in n² dimensions.
struct CltDiagnostic {
    double omega = 0.0;
    double z = 0.0;
    double radius = 0.0;
};
CltDiagnostic clt_radius(const SparsifierBatch& batch, int m, int n, double d_eff, double confidence = 0.95);

/// Upper-triangular R with R^* R = P (Δ̃ + qI) Pᵀ for a single MTSF.
struct CholeskyFactor {
    /// perm[i] = node eliminated at step i.
    std::vector<int> perm;
    /// Row-major upper-triangular factor in permuted indices, diagonal included.
    SparseMatrix upper;
    double q = 0.0;
    /// Strictly upper nonzeros of R.
    int offdiag_nonzeros = 0;
    /// Multiply/divide/sqrt count of the factorization.
    std::uint64_t factor_operations = 0;

    int dimension() const noexcept { return static_cast<int>(perm.size()); }
};

/// Eliminates leaves first (peeling every tree), then each cycle in traversal order.
/// `edge_scale` is indexed by edge id (empty means 1): Δ̃ = Σ_{e∈F} scale_e w_e b_e b_e^*.
/// Throws SingularSystem for a tree component at q = 0.
CholeskyFactor cholesky_mtsf(const ConnectionGraph& g, const Mtsf& forest, double q,
                             std::span<const double> edge_scale = {});

/// Forward and back substitution. `operations`, when given, accumulates the flop count.
Vector solve_factored(const CholeskyFactor& factor, const Vector& b, std::uint64_t* operations = nullptr);

/// n - r + Σ (n_i - 3).
int cholesky_fill_bound(const Mtsf& forest, int node_count);

} // namespace maglap
