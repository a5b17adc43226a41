#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "maglap/graph.hpp"
#include "maglap/leverage.hpp"
#include "maglap/solvers.hpp"

namespace maglap {

/// κ_uv > 0 means u is preferred to v.
struct Comparison {
    int u = 0;
    int v = 0;
    double kappa = 0.0;
};

/// ϑ(uv) = π κ_uv / (n - 1) on a unit-weight graph. Requires |κ| ≤ n - 1; a pair listed in
/// both orientations must be antisymmetric and is kept once.
ConnectionGraph embed_comparisons(int n, std::span<const Comparison> comparisons);

/// κ_uv = ϑ(uv) wrapped to (-π, π], one per edge in edge order.
std::vector<Comparison> comparisons_from_graph(const ConnectionGraph& g);

/// Same edges with w_uv scaled by 1/√(d(u) d(v)), d the unweighted degree.
ConnectionGraph degree_normalize(const ConnectionGraph& g);

enum class EigenMode { exact, sparsify_and_eigensolve, sparsify_and_precondition };

std::string to_string(EigenMode mode);
EigenMode parse_eigen_mode(const std::string& name);

struct SpectralOptions {
    EigenMode mode = EigenMode::exact;
    /// CRSFs per sparsifier (sparsifying modes).
    int batches = 3;
    LsMethod ls = LsMethod::uniform;
    std::uint64_t seed = 0;
    int threads = 1;
};

struct SpectralScores {
    /// ĥ(u) = arg f₁(u) in [0, 2π), with arg 0 = 0.
    std::vector<double> angles;
    EigenResult eigen;
    /// Least eigenspace not simple, or every score equal.
    bool degenerate = false;
    /// Edges of the sparsifier (sparsifying modes).
    int sparsifier_edges = 0;
    int cycles_sampled = 0;
};

/// Least eigenvector of the degree-normalized magnetic Laplacian of g. The sparsifying modes
/// sample `batches` CRSFs of g (capped, self-normalized) with scores for the unit-weight graph.
SpectralScores spectral_scores(const ConnectionGraph& g, SpectralOptions options = {});

/// ĥ(u) from a vector, in [0, 2π).
std::vector<double> angular_scores(const Vector& f);

/// r(u) ∈ 1..n by decreasing score; equal scores are ordered by node id.
std::vector<int> ranks_from_scores(std::span<const double> scores);

struct ShiftResult {
    int shift = 0;
    long long upsets = 0;
    /// Upsets for s = 0..n-1.
    std::vector<long long> upsets_per_shift;
};

/// σ_s(r) = 1 + (r - 1 + s) mod n.
int shift_rank(int rank, int shift, int n);

/// Σ_uv |sign κ_uv - sign(σ(r_v) - σ(r_u))| for one shift.
long long count_upsets(std::span<const int> ranks, std::span<const Comparison> comparisons, int shift);

/// Exhaustive minimization over the n shifts; the smallest s wins ties.
ShiftResult best_circular_shift(std::span<const int> ranks, std::span<const Comparison> comparisons);

/// (concordant - discordant) / C(n, 2) for two permutations of 1..n.
double kendall_tau(std::span<const int> r1, std::span<const int> r2);

/// Rank n + 1 - h(u) for planted scores h (larger is better).
std::vector<int> planted_ranks(std::span<const int> h);

struct RankingResult {
    std::vector<double> angles;
    /// Induced ranks before the shift.
    std::vector<int> induced;
    /// σ*(r(u)).
    std::vector<int> ranks;
    int shift = 0;
    long long upsets = 0;
    std::optional<double> tau;
    bool degenerate = false;
};

/// Steps 3 onward from a set of angular scores.
RankingResult rank_from_scores(std::span<const double> angles, std::span<const Comparison> comparisons,
                               std::span<const int> reference = {});

/// Full pipeline on a comparison graph: spectral scores, induced ranks, best shift, tau.
RankingResult syncrank(const ConnectionGraph& g, std::span<const Comparison> comparisons, SpectralOptions options = {},
                       std::span<const int> reference = {});

} // namespace maglap
