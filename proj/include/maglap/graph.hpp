#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Sparse>

namespace maglap {

using Complex = std::complex<double>;
using SparseMatrix = Eigen::SparseMatrix<Complex, Eigen::RowMajor>;
using RealSparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Vector = Eigen::VectorXcd;

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

/// Reduces an angle to [0, 2π).
double wrap_angle(double angle);

/// Undirected edge with a stored orientation head -> tail. `angle` is ϑ(head, tail).
struct Edge {
    int head = 0;
    int tail = 0;
    double weight = 1.0;
    double angle = 0.0;
};

/// One entry of a node's adjacency list.
struct Incidence {
    int neighbor = 0;
    int edge = 0;
    /// +1 when the owning node is the edge head, -1 when it is the tail.
    int direction = 1;
};

/// Weighted simple undirected graph carrying a U(1) connection.
///
/// Querying an edge against its stored orientation yields the negated angle,
/// so the phase of vu is the conjugate of the phase of uv. Immutable after
/// construction.
class ConnectionGraph {
public:
    ConnectionGraph() = default;
    /// Validates simplicity, node ranges and positive weights; angles are wrapped to [0, 2π).
    ConnectionGraph(int node_count, std::vector<Edge> edges);

    int node_count() const noexcept { return n_; }
    int edge_count() const noexcept { return static_cast<int>(edges_.size()); }

    const Edge& edge(int e) const { return edges_[static_cast<std::size_t>(e)]; }
    std::span<const Edge> edges() const noexcept { return edges_; }

    std::span<const Incidence> neighbors(int v) const noexcept
    {
        const auto begin = static_cast<std::size_t>(offsets_[static_cast<std::size_t>(v)]);
        const auto end = static_cast<std::size_t>(offsets_[static_cast<std::size_t>(v) + 1]);
        return {adjacency_.data() + begin, end - begin};
    }

    /// Number of neighbours (unweighted).
    int degree(int v) const noexcept { return offsets_[static_cast<std::size_t>(v) + 1] - offsets_[static_cast<std::size_t>(v)]; }
    double weighted_degree(int v) const noexcept { return weighted_degree_[static_cast<std::size_t>(v)]; }

    std::optional<int> find_edge(int u, int v) const;

    /// ϑ(from, other endpoint of e).
    double oriented_angle(int e, int from) const
    {
        const Edge& ed = edge(e);
        return from == ed.head ? ed.angle : wrap_angle(-ed.angle);
    }

    bool connected() const noexcept { return component_count_ == 1; }
    int component_count() const noexcept { return component_count_; }
    std::span<const int> component_labels() const noexcept { return component_; }

    bool unit_weights() const noexcept { return unit_weights_; }

    /// True when some cycle has holonomy different from 1 (within 1e-10 on 1 - cos).
    bool nontrivial_connection() const noexcept { return nontrivial_; }

private:
    int n_ = 0;
    std::vector<Edge> edges_;
    std::vector<int> offsets_{0};
    std::vector<Incidence> adjacency_;
    std::vector<double> weighted_degree_;
    std::unordered_map<std::uint64_t, int> lookup_;
    std::vector<int> component_;
    int component_count_ = 0;
    bool unit_weights_ = true;
    bool nontrivial_ = false;
};

/// Δ (or Λ) together with the regularization q, kept apart so both Δ and Δ + qI are addressable.
struct MagneticLaplacian {
    SparseMatrix matrix;
    double q = 0.0;

    int dimension() const noexcept { return static_cast<int>(matrix.rows()); }
    SparseMatrix regularized() const;
};

/// Δ = Σ_uv w_uv (e_u - φ_uv e_v)(e_u - φ_uv e_v)^*, φ_uv = exp(-iϑ(uv)).
/// Off-diagonal entry (u, v) is -w_uv exp(iϑ(uv)).
MagneticLaplacian assemble_magnetic_laplacian(const ConnectionGraph& g, double q = 0.0);

/// Λ = B₀ᵀ W B₀ (angles ignored), stored as a complex matrix with zero imaginary part.
MagneticLaplacian assemble_combinatorial_laplacian(const ConnectionGraph& g, double q = 0.0);

/// Σ_e scale_e · w_e · b_e b_e^* over the listed edges; `with_phases = false` drops the connection.
SparseMatrix assemble_edge_laplacian(const ConnectionGraph& g,
                                     std::span<const std::pair<int, double>> edge_scales,
                                     bool with_phases = true);

struct IncidenceOperator {
    /// Row e = uv holds exp(-iϑ/2) at u and -exp(+iϑ/2) at v.
    SparseMatrix twisted;
    /// +1 at head, -1 at tail.
    RealSparseMatrix oriented;
};

IncidenceOperator assemble_incidence(const ConnectionGraph& g);

/// Row e of the twisted incidence: coefficients at (head, tail).
std::pair<Complex, Complex> incidence_row(const Edge& e);

struct Holonomy {
    /// Σ ϑ over the oriented cycle, wrapped to [0, 2π).
    double angle = 0.0;
    /// 2 - 2cos(angle); invariant under orientation flip.
    double weight = 0.0;
};

inline double cycle_weight(double angle) { return 2.0 - 2.0 * std::cos(angle); }

/// Holonomy of the closed walk cycle[0] -> cycle[1] -> ... -> cycle.back() -> cycle[0].
/// Throws InvalidInput on repeated nodes, fewer than three nodes, or missing edges.
Holonomy holonomy(const ConnectionGraph& g, std::span<const int> cycle);

/// Same topology and weights, all angles zero.
ConnectionGraph without_connection(const ConnectionGraph& g);

/// Same topology and angles, all weights one.
ConnectionGraph with_unit_weights(const ConnectionGraph& g);

/// Reads the `u v weight angle` edge-list format. A `# nodes N` comment fixes the
/// node count; otherwise it is max id + 1 (or `node_count` when given).
ConnectionGraph read_edge_list(std::istream& in, std::optional<int> node_count = std::nullopt);
ConnectionGraph read_edge_list_file(const std::string& path, std::optional<int> node_count = std::nullopt);

void write_edge_list(std::ostream& out, const ConnectionGraph& g, const std::string& comment = {});

} // namespace maglap
