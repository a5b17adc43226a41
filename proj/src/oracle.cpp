#include "maglap/oracle.hpp"

#include <cmath>
#include <numeric>

#include "maglap/errors.hpp"

namespace maglap {

namespace {

constexpr int kEnumerationLimit = 20;

// Factor of Δ + qI after checking it is safely positive definite.
Eigen::LLT<Eigen::MatrixXcd> checked_factor(const ConnectionGraph& g, double q)
{
    const Eigen::MatrixXcd a = dense_laplacian(g, q);
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(a, Eigen::EigenvaluesOnly).eigenvalues();
    const double scale = std::max(1.0, ev.size() ? ev.cwiseAbs().maxCoeff() : 0.0);
    if (ev.size() == 0 || ev(0) <= 1e-12 * scale) {
        throw SingularSystem("Δ + qI is singular (λ_min = " + std::to_string(ev.size() ? ev(0) : 0.0) +
                             "): need q > 0 or an inconsistent cycle in every component");
    }
    return Eigen::LLT<Eigen::MatrixXcd>(a);
}

Eigen::MatrixXcd weighted_incidence(const ConnectionGraph& g)
{
    Eigen::MatrixXcd b = Eigen::MatrixXcd::Zero(g.edge_count(), g.node_count());
    for (int e = 0; e < g.edge_count(); ++e) {
        const Edge& ed = g.edge(e);
        const auto [h, t] = incidence_row(ed);
        const double s = std::sqrt(ed.weight);
        b(e, ed.head) = s * h;
        b(e, ed.tail) = s * t;
    }
    return b;
}

} // namespace

Eigen::MatrixXcd dense_laplacian(const ConnectionGraph& g, double q)
{
    const int n = g.node_count();
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(n, n);
    for (const Edge& e : g.edges()) {
        const Complex off = -e.weight * std::polar(1.0, e.angle);
        a(e.head, e.head) += e.weight;
        a(e.tail, e.tail) += e.weight;
        a(e.head, e.tail) += off;
        a(e.tail, e.head) += std::conj(off);
    }
    a.diagonal().array() += q;
    return a;
}

DppKernel exact_kernel(const ConnectionGraph& g, double q)
{
    if (q < 0.0) {
        throw InvalidInput("q must be nonnegative");
    }
    const auto llt = checked_factor(g, q);
    const Eigen::MatrixXcd b = weighted_incidence(g);
    DppKernel out;
    out.q = q;
    const Eigen::MatrixXcd x = llt.solve(b.adjoint()); // (Δ+qI)⁻¹ B*
    out.kernel = b * x;
    out.kernel = (out.kernel + out.kernel.adjoint()) / 2.0;
    out.leverage = out.kernel.diagonal().real();
    out.d_eff = out.leverage.sum();
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(out.kernel, Eigen::EigenvaluesOnly).eigenvalues();
    out.kappa = ev.size() ? ev.maxCoeff() : 0.0;
    const Eigen::MatrixXcd inv = llt.solve(Eigen::MatrixXcd::Identity(g.node_count(), g.node_count()));
    const Eigen::MatrixXcd lap = dense_laplacian(g, 0.0);
    out.var_edges = q * (lap * inv * inv).trace().real();
    return out;
}

double determinant(const ConnectionGraph& g, double q)
{
    const Eigen::MatrixXcd a = dense_laplacian(g, q);
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(a, Eigen::EigenvaluesOnly).eigenvalues();
    double det = 1.0;
    for (double l : ev) {
        det *= std::max(0.0, l);
    }
    return det;
}

double mtsf_probability(const ConnectionGraph& g, double q, const Mtsf& forest)
{
    validate_mtsf(g, forest);
    if (!g.unit_weights()) {
        throw InvalidInput("the MTSF measure is defined here for unit weights");
    }
    const double det = determinant(g, q);
    if (!(det > 0.0)) {
        throw SingularSystem("det(Δ + qI) = 0");
    }
    double w = std::pow(q, static_cast<double>(forest.tree_count()));
    for (const auto& c : forest.cycles) {
        w *= cycle_weight(holonomy(g, c.cycle).angle);
    }
    return w / det;
}

double edge_set_probability(const ConnectionGraph& g, double q, const Mtsf& forest)
{
    double p = mtsf_probability(g, q, forest);
    for (const auto& t : forest.trees) {
        p *= static_cast<double>(t.edges.size() + 1);
    }
    return p;
}

void for_each_mtsf(const ConnectionGraph& g, double q,
                   const std::function<void(std::span<const int>, double)>& visit)
{
    const int m = g.edge_count();
    const int n = g.node_count();
    if (m > kEnumerationLimit) {
        throw InvalidInput("enumeration is limited to m <= " + std::to_string(kEnumerationLimit) + " edges (got " +
                           std::to_string(m) + ")");
    }
    if (!g.unit_weights()) {
        throw InvalidInput("enumeration expects unit weights");
    }

    // Union-find with rollback (union by size, no compression). `offset[x]` is
    // h(x) - h(parent(x)) for a potential with h(head) - h(tail) = ϑ along tree edges.
    std::vector<int> parent(static_cast<std::size_t>(n));
    std::iota(parent.begin(), parent.end(), 0);
    std::vector<int> size(static_cast<std::size_t>(n), 1);
    std::vector<double> offset(static_cast<std::size_t>(n), 0.0);
    std::vector<char> has_cycle(static_cast<std::size_t>(n), 0);
    std::vector<int> chosen;
    chosen.reserve(static_cast<std::size_t>(m));

    auto find = [&](int x, double& h) {
        h = 0.0;
        while (parent[static_cast<std::size_t>(x)] != x) {
            h += offset[static_cast<std::size_t>(x)];
            x = parent[static_cast<std::size_t>(x)];
        }
        return x;
    };

    std::function<void(int, double)> recurse = [&](int e, double cycle_product) {
        if (e == m) {
            // Each tree contributes q once per admissible root, i.e. q·|T|.
            double w = cycle_product;
            for (int x = 0; x < n && w != 0.0; ++x) {
                if (parent[static_cast<std::size_t>(x)] == x && !has_cycle[static_cast<std::size_t>(x)]) {
                    w *= q * size[static_cast<std::size_t>(x)];
                }
            }
            if (w != 0.0) {
                visit(chosen, w);
            }
            return;
        }
        // Excluding e.
        recurse(e + 1, cycle_product);

        const Edge& ed = g.edge(e);
        double hu = 0.0;
        double hv = 0.0;
        const int ru = find(ed.head, hu);
        const int rv = find(ed.tail, hv);
        chosen.push_back(e);
        if (ru == rv) {
            if (!has_cycle[static_cast<std::size_t>(ru)]) {
                // Holonomy of the new cycle: ϑ(head, tail) plus the tree path tail -> head.
                const double theta = ed.angle - (hu - hv);
                has_cycle[static_cast<std::size_t>(ru)] = 1;
                recurse(e + 1, cycle_product * cycle_weight(theta));
                has_cycle[static_cast<std::size_t>(ru)] = 0;
            }
        } else if (!(has_cycle[static_cast<std::size_t>(ru)] && has_cycle[static_cast<std::size_t>(rv)])) {
            // Attach the smaller root below the larger; h(head) - h(tail) = ϑ fixes the offset.
            int child = ru;
            int root = rv;
            double off = ed.angle - hu + hv; // h(ru) - h(rv)
            if (size[static_cast<std::size_t>(ru)] > size[static_cast<std::size_t>(rv)]) {
                std::swap(child, root);
                off = -off;
            }
            parent[static_cast<std::size_t>(child)] = root;
            offset[static_cast<std::size_t>(child)] = off;
            size[static_cast<std::size_t>(root)] += size[static_cast<std::size_t>(child)];
            const char before = has_cycle[static_cast<std::size_t>(root)];
            has_cycle[static_cast<std::size_t>(root)] = before | has_cycle[static_cast<std::size_t>(child)];
            recurse(e + 1, cycle_product);
            has_cycle[static_cast<std::size_t>(root)] = before;
            size[static_cast<std::size_t>(root)] -= size[static_cast<std::size_t>(child)];
            offset[static_cast<std::size_t>(child)] = 0.0;
            parent[static_cast<std::size_t>(child)] = child;
        }
        chosen.pop_back();
    };
    recurse(0, 1.0);
}

std::vector<EnumeratedMtsf> enumerate_mtsfs(const ConnectionGraph& g, double q)
{
    std::vector<EnumeratedMtsf> out;
    double total = 0.0;
    for_each_mtsf(g, q, [&](std::span<const int> edges, double w) {
        out.push_back({std::vector<int>(edges.begin(), edges.end()), w, 0.0});
        total += w;
    });
    const double det = determinant(g, q);
    if (!(det > 0.0)) {
        throw SingularSystem("det(Δ + qI) = 0: the MTSF measure is empty");
    }
    for (auto& f : out) {
        f.probability = f.weight / det;
    }
    return out;
}

double expected_walk_steps(const ConnectionGraph& g, double q)
{
    const auto llt = checked_factor(g, q);
    const int n = g.node_count();
    Eigen::MatrixXcd dq = Eigen::MatrixXcd::Zero(n, n);
    for (int v = 0; v < n; ++v) {
        dq(v, v) = g.degree(v) + q;
    }
    return llt.solve(dq).trace().real();
}

} // namespace maglap
