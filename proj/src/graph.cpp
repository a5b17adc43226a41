#include "maglap/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <queue>
#include <sstream>

#include "maglap/errors.hpp"

namespace maglap {

namespace {

std::uint64_t pair_key(int u, int v)
{
    const auto a = static_cast<std::uint64_t>(std::min(u, v));
    const auto b = static_cast<std::uint64_t>(std::max(u, v));
    return (a << 32) | b;
}

using Triplet = Eigen::Triplet<Complex>;

} // namespace

double wrap_angle(double angle)
{
    double r = std::fmod(angle, kTwoPi);
    if (r < 0.0) {
        r += kTwoPi;
    }
    if (r >= kTwoPi) {
        r = 0.0;
    }
    return r;
}

ConnectionGraph::ConnectionGraph(int node_count, std::vector<Edge> edges)
    : n_(node_count), edges_(std::move(edges))
{
    if (n_ <= 0) {
        throw InvalidInput("graph must have at least one node");
    }
    const auto n = static_cast<std::size_t>(n_);
    std::vector<int> deg(n, 0);
    weighted_degree_.assign(n, 0.0);
    lookup_.reserve(edges_.size() * 2);
    for (std::size_t e = 0; e < edges_.size(); ++e) {
        Edge& ed = edges_[e];
        if (ed.head < 0 || ed.head >= n_ || ed.tail < 0 || ed.tail >= n_) {
            throw InvalidInput("edge " + std::to_string(e) + " has an endpoint outside [0, " + std::to_string(n_) + ")");
        }
        if (ed.head == ed.tail) {
            throw InvalidInput("edge " + std::to_string(e) + " is a self-loop at node " + std::to_string(ed.head));
        }
        if (!(ed.weight > 0.0) || !std::isfinite(ed.weight)) {
            throw InvalidInput("edge " + std::to_string(e) + " has a non-positive weight");
        }
        if (!std::isfinite(ed.angle)) {
            throw InvalidInput("edge " + std::to_string(e) + " has a non-finite angle");
        }
        ed.angle = wrap_angle(ed.angle);
        const auto [it, inserted] = lookup_.emplace(pair_key(ed.head, ed.tail), static_cast<int>(e));
        if (!inserted) {
            throw InvalidInput("duplicate edge {" + std::to_string(ed.head) + ", " + std::to_string(ed.tail) +
                               "} (edges " + std::to_string(it->second) + " and " + std::to_string(e) + ")");
        }
        ++deg[static_cast<std::size_t>(ed.head)];
        ++deg[static_cast<std::size_t>(ed.tail)];
        weighted_degree_[static_cast<std::size_t>(ed.head)] += ed.weight;
        weighted_degree_[static_cast<std::size_t>(ed.tail)] += ed.weight;
        if (ed.weight != 1.0) {
            unit_weights_ = false;
        }
    }

    offsets_.assign(n + 1, 0);
    for (std::size_t v = 0; v < n; ++v) {
        offsets_[v + 1] = offsets_[v] + deg[v];
    }
    adjacency_.resize(static_cast<std::size_t>(offsets_[n]));
    std::vector<int> fill(offsets_.begin(), offsets_.end() - 1);
    for (std::size_t e = 0; e < edges_.size(); ++e) {
        const Edge& ed = edges_[e];
        adjacency_[static_cast<std::size_t>(fill[static_cast<std::size_t>(ed.head)]++)] = {ed.tail, static_cast<int>(e), +1};
        adjacency_[static_cast<std::size_t>(fill[static_cast<std::size_t>(ed.tail)]++)] = {ed.head, static_cast<int>(e), -1};
    }

    // Components, and a potential h with ϑ(uv) = h(u) - h(v) along a BFS forest.
    // The connection is trivial iff every non-tree edge agrees with h.
    component_.assign(n, -1);
    std::vector<double> potential(n, 0.0);
    std::queue<int> frontier;
    for (int s = 0; s < n_; ++s) {
        if (component_[static_cast<std::size_t>(s)] >= 0) {
            continue;
        }
        component_[static_cast<std::size_t>(s)] = component_count_;
        frontier.push(s);
        while (!frontier.empty()) {
            const int u = frontier.front();
            frontier.pop();
            for (const Incidence& inc : neighbors(u)) {
                auto& label = component_[static_cast<std::size_t>(inc.neighbor)];
                if (label < 0) {
                    label = component_count_;
                    potential[static_cast<std::size_t>(inc.neighbor)] =
                        potential[static_cast<std::size_t>(u)] - oriented_angle(inc.edge, u);
                    frontier.push(inc.neighbor);
                }
            }
        }
        ++component_count_;
    }
    for (const Edge& ed : edges_) {
        const double mismatch = ed.angle - potential[static_cast<std::size_t>(ed.head)] + potential[static_cast<std::size_t>(ed.tail)];
        if (1.0 - std::cos(mismatch) > 1e-10) {
            nontrivial_ = true;
            break;
        }
    }
}

std::optional<int> ConnectionGraph::find_edge(int u, int v) const
{
    if (u == v) {
        return std::nullopt;
    }
    const auto it = lookup_.find(pair_key(u, v));
    if (it == lookup_.end()) {
        return std::nullopt;
    }
    return it->second;
}

SparseMatrix MagneticLaplacian::regularized() const
{
    SparseMatrix shifted = matrix;
    if (q != 0.0) {
        for (int i = 0; i < shifted.rows(); ++i) {
            shifted.coeffRef(i, i) += q;
        }
    }
    return shifted;
}

std::pair<Complex, Complex> incidence_row(const Edge& e)
{
    const double half = 0.5 * e.angle;
    return {std::polar(1.0, -half), -std::polar(1.0, half)};
}

SparseMatrix assemble_edge_laplacian(const ConnectionGraph& g,
                                     std::span<const std::pair<int, double>> edge_scales,
                                     bool with_phases)
{
    const int n = g.node_count();
    std::vector<Triplet> triplets;
    triplets.reserve(edge_scales.size() * 4 + static_cast<std::size_t>(n));
    for (int v = 0; v < n; ++v) {
        // Keeps the diagonal structurally present so Δ + qI never reallocates.
        triplets.emplace_back(v, v, Complex(0.0, 0.0));
    }
    for (const auto& [e, scale] : edge_scales) {
        const Edge& ed = g.edge(e);
        const double w = ed.weight * scale;
        const Complex off = with_phases ? -w * std::polar(1.0, ed.angle) : Complex(-w, 0.0);
        triplets.emplace_back(ed.head, ed.head, Complex(w, 0.0));
        triplets.emplace_back(ed.tail, ed.tail, Complex(w, 0.0));
        triplets.emplace_back(ed.head, ed.tail, off);
        triplets.emplace_back(ed.tail, ed.head, std::conj(off));
    }
    SparseMatrix out(n, n);
    out.setFromTriplets(triplets.begin(), triplets.end());
    out.makeCompressed();
    return out;
}

MagneticLaplacian assemble_magnetic_laplacian(const ConnectionGraph& g, double q)
{
    if (q < 0.0) {
        throw InvalidInput("regularization q must be nonnegative");
    }
    std::vector<std::pair<int, double>> all;
    all.reserve(static_cast<std::size_t>(g.edge_count()));
    for (int e = 0; e < g.edge_count(); ++e) {
        all.emplace_back(e, 1.0);
    }
    return {assemble_edge_laplacian(g, all, true), q};
}

MagneticLaplacian assemble_combinatorial_laplacian(const ConnectionGraph& g, double q)
{
    if (q < 0.0) {
        throw InvalidInput("regularization q must be nonnegative");
    }
    std::vector<std::pair<int, double>> all;
    all.reserve(static_cast<std::size_t>(g.edge_count()));
    for (int e = 0; e < g.edge_count(); ++e) {
        all.emplace_back(e, 1.0);
    }
    return {assemble_edge_laplacian(g, all, false), q};
}

IncidenceOperator assemble_incidence(const ConnectionGraph& g)
{
    const int m = g.edge_count();
    std::vector<Triplet> twisted;
    std::vector<Eigen::Triplet<double>> oriented;
    twisted.reserve(static_cast<std::size_t>(2 * m));
    oriented.reserve(static_cast<std::size_t>(2 * m));
    for (int e = 0; e < m; ++e) {
        const Edge& ed = g.edge(e);
        const auto [at_head, at_tail] = incidence_row(ed);
        twisted.emplace_back(e, ed.head, at_head);
        twisted.emplace_back(e, ed.tail, at_tail);
        oriented.emplace_back(e, ed.head, 1.0);
        oriented.emplace_back(e, ed.tail, -1.0);
    }
    IncidenceOperator out{SparseMatrix(m, g.node_count()), RealSparseMatrix(m, g.node_count())};
    out.twisted.setFromTriplets(twisted.begin(), twisted.end());
    out.oriented.setFromTriplets(oriented.begin(), oriented.end());
    return out;
}

Holonomy holonomy(const ConnectionGraph& g, std::span<const int> cycle)
{
    if (cycle.size() < 3) {
        throw InvalidInput("a cycle needs at least three distinct nodes");
    }
    std::vector<int> sorted(cycle.begin(), cycle.end());
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw InvalidInput("cycle repeats a node");
    }
    double theta = 0.0;
    for (std::size_t i = 0; i < cycle.size(); ++i) {
        const int from = cycle[i];
        const int to = cycle[(i + 1) % cycle.size()];
        const auto e = g.find_edge(from, to);
        if (!e) {
            throw InvalidInput("cycle is not closed: no edge between " + std::to_string(from) + " and " + std::to_string(to));
        }
        theta += g.oriented_angle(*e, from);
    }
    const double wrapped = wrap_angle(theta);
    return {wrapped, cycle_weight(wrapped)};
}

ConnectionGraph read_edge_list(std::istream& in, std::optional<int> node_count)
{
    std::vector<Edge> edges;
    std::unordered_map<std::uint64_t, int> first_line;
    std::optional<int> declared;
    int max_id = -1;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) {
            continue;
        }
        if (line[first] == '#') {
            std::istringstream comment(line.substr(first + 1));
            std::string key;
            int value = 0;
            if (comment >> key && key == "nodes" && comment >> value) {
                declared = value;
            }
            continue;
        }
        std::istringstream fields(line);
        Edge e;
        if (!(fields >> e.head >> e.tail >> e.weight >> e.angle)) {
            throw InvalidInput("line " + std::to_string(line_no) + ": expected `u v weight angle`");
        }
        std::string extra;
        if (fields >> extra) {
            throw InvalidInput("line " + std::to_string(line_no) + ": trailing field `" + extra + "`");
        }
        if (e.head < 0 || e.tail < 0) {
            throw InvalidInput("line " + std::to_string(line_no) + ": negative node id");
        }
        if (e.head == e.tail) {
            throw InvalidInput("line " + std::to_string(line_no) + ": self-loop at node " + std::to_string(e.head));
        }
        const auto [it, inserted] = first_line.emplace(pair_key(e.head, e.tail), line_no);
        if (!inserted) {
            throw InvalidInput("line " + std::to_string(line_no) + ": duplicate edge {" + std::to_string(e.head) + ", " +
                               std::to_string(e.tail) + "} first seen on line " + std::to_string(it->second));
        }
        max_id = std::max({max_id, e.head, e.tail});
        edges.push_back(e);
    }
    int n = max_id + 1;
    if (declared) {
        n = *declared;
    }
    if (node_count) {
        n = *node_count;
    }
    if (n <= max_id) {
        throw InvalidInput("node count " + std::to_string(n) + " is smaller than max node id + 1 = " + std::to_string(max_id + 1));
    }
    return ConnectionGraph(n, std::move(edges));
}

ConnectionGraph read_edge_list_file(const std::string& path, std::optional<int> node_count)
{
    std::ifstream in(path);
    if (!in) {
        throw InvalidInput("cannot open edge list `" + path + "`");
    }
    return read_edge_list(in, node_count);
}

void write_edge_list(std::ostream& out, const ConnectionGraph& g, const std::string& comment)
{
    if (!comment.empty()) {
        std::istringstream lines(comment);
        std::string line;
        while (std::getline(lines, line)) {
            out << "# " << line << '\n';
        }
    }
    out << "# nodes " << g.node_count() << '\n';
    out << "# edges " << g.edge_count() << '\n';
    out << std::setprecision(17);
    for (const Edge& e : g.edges()) {
        out << e.head << ' ' << e.tail << ' ' << e.weight << ' ' << e.angle << '\n';
    }
}

ConnectionGraph without_connection(const ConnectionGraph& g)
{
    std::vector<Edge> edges(g.edges().begin(), g.edges().end());
    for (auto& e : edges) {
        e.angle = 0.0;
    }
    return ConnectionGraph(g.node_count(), std::move(edges));
}

ConnectionGraph with_unit_weights(const ConnectionGraph& g)
{
    std::vector<Edge> edges(g.edges().begin(), g.edges().end());
    for (auto& e : edges) {
        e.weight = 1.0;
    }
    return ConnectionGraph(g.node_count(), std::move(edges));
}

} // namespace maglap
