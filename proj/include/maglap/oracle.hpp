#pragma once

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "maglap/graph.hpp"
#include "maglap/sampler.hpp"

namespace maglap {

/// Dense ground truth for small graphs. Independent of the sparse path.
struct DppKernel {
    /// K = W^{1/2} B (Δ + qI)⁻¹ B* W^{1/2}, m × m.
    Eigen::MatrixXcd kernel;
    double q = 0.0;
    /// K_ee.
    Eigen::VectorXd leverage;
    /// Tr K = E|F|.
    double d_eff = 0.0;
    /// λ_max(K).
    double kappa = 0.0;
    /// Var|F| = Tr K(I - K) = q Tr Δ(Δ + qI)⁻².
    double var_edges = 0.0;

    double intrinsic_ratio() const { return d_eff / kappa; }
};

Eigen::MatrixXcd dense_laplacian(const ConnectionGraph& g, double q = 0.0);

/// Throws SingularSystem when Δ + qI has an eigenvalue below 1e-12 · max(1, ‖Δ‖).
DppKernel exact_kernel(const ConnectionGraph& g, double q);

/// det(Δ + qI) (real, nonnegative).
double determinant(const ConnectionGraph& g, double q);

/// Probability of the rooted MTSF: q^{#trees} Π (2 - 2cos θ) / det(Δ + qI).
/// The roots are part of the outcome; validates `forest` first.
double mtsf_probability(const ConnectionGraph& g, double q, const Mtsf& forest);

/// Probability of the edge set of `forest`, summed over the Π|T| root choices.
double edge_set_probability(const ConnectionGraph& g, double q, const Mtsf& forest);

/// Calls `visit(edges, weight)` for every spanning edge subset with at most one
/// cycle per component. `weight` sums q^{#trees} Π (2 - 2cos θ) over root
/// choices, i.e. q^{#trees} Π|T| Π (2 - 2cos θ), so the weights add up to
/// det(Δ + qI). Zero-weight subsets (tree components at q = 0) are skipped.
/// Guard: m ≤ 20.
void for_each_mtsf(const ConnectionGraph& g, double q,
                   const std::function<void(std::span<const int> edges, double weight)>& visit);

struct EnumeratedMtsf {
    std::vector<int> edges;
    double weight = 0.0;
    /// Law of the unrooted edge set.
    double probability = 0.0;
};

std::vector<EnumeratedMtsf> enumerate_mtsfs(const ConnectionGraph& g, double q);

/// E[T] = Tr((Δ + qI)⁻¹ (D + qI)) with D the unweighted degree matrix.
double expected_walk_steps(const ConnectionGraph& g, double q);

} // namespace maglap
