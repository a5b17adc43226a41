#include <doctest.h>

#include <cmath>
#include <map>
#include <numbers>

#include "maglap/errors.hpp"
#include "maglap/oracle.hpp"
#include "maglap/rng.hpp"

using namespace maglap;

namespace {

constexpr double pi = std::numbers::pi;

ConnectionGraph cycle_graph(int n, double total_angle)
{
    std::vector<Edge> edges;
    for (int v = 0; v < n; ++v) {
        edges.push_back({v, (v + 1) % n, 1.0, total_angle / n});
    }
    return ConnectionGraph(n, std::move(edges));
}

// Connected unit-weight graph: random spanning tree plus extra edges, m ≤ max_edges.
ConnectionGraph random_small_graph(std::uint64_t seed, int n, int max_edges)
{
    CounterRng rng(seed);
    std::vector<Edge> edges;
    std::map<std::pair<int, int>, bool> used;
    for (int v = 1; v < n; ++v) {
        const int u = static_cast<int>(rng.below(static_cast<std::uint64_t>(v)));
        edges.push_back({u, v, 1.0, kTwoPi * rng.uniform()});
        used[{u, v}] = true;
    }
    for (int tries = 0; tries < 50 && static_cast<int>(edges.size()) < max_edges; ++tries) {
        int u = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
        int v = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
        if (u == v) {
            continue;
        }
        if (u > v) {
            std::swap(u, v);
        }
        if (!used[{u, v}]) {
            used[{u, v}] = true;
            edges.push_back({u, v, 1.0, kTwoPi * rng.uniform()});
        }
    }
    return ConnectionGraph(n, std::move(edges));
}

// l(e) = b_e (Δ+qI)⁻¹ b_e^* from an explicit inverse.
double dense_inverse_leverage(const ConnectionGraph& g, double q, int e)
{
    const Eigen::MatrixXcd inv = dense_laplacian(g, q).fullPivLu().inverse();
    const Edge& ed = g.edge(e);
    Eigen::VectorXcd b = Eigen::VectorXcd::Zero(g.node_count());
    const auto [h, t] = incidence_row(ed);
    b(ed.head) = h;
    b(ed.tail) = t;
    return (b.transpose() * inv * b.conjugate())(0).real();
}

} // namespace

TEST_CASE("singular systems are reported")
{
    // A single edge carries a trivializable connection: Δ has eigenvalues {0, 2}.
    const ConnectionGraph edge(2, {{0, 1, 1.0, pi}});
    CHECK_THROWS_AS(exact_kernel(edge, 0.0), SingularSystem);
    CHECK_THROWS_AS(expected_walk_steps(edge, 0.0), SingularSystem);
    CHECK_THROWS_AS(exact_kernel(cycle_graph(4, 0.0), 0.0), SingularSystem);
    CHECK_NOTHROW(exact_kernel(edge, 0.5));
}

TEST_CASE("kernel on a triangle with holonomy pi")
{
    const ConnectionGraph tri = cycle_graph(3, pi);
    const DppKernel k = exact_kernel(tri, 1.0);
    for (int e = 0; e < 3; ++e) {
        CHECK(std::abs(k.leverage(e) - k.leverage(0)) < 1e-12);
        CHECK(std::abs(k.leverage(e) - dense_inverse_leverage(tri, 1.0, e)) < 1e-10);
    }
}

TEST_CASE("kernel spectrum and projection at q = 0")
{
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const ConnectionGraph g = random_small_graph(seed, 7, 11);
        CAPTURE(seed);
        for (double q : {0.0, 0.3, 3.0}) {
            const DppKernel k = exact_kernel(g, q);
            const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(k.kernel).eigenvalues();
            CHECK(ev.minCoeff() >= -1e-8);
            CHECK(ev.maxCoeff() <= 1 + 1e-8);
            CHECK(std::abs(k.d_eff - k.leverage.sum()) < 1e-12);
            // E|F| = Tr Δ(Δ+qI)⁻¹.
            const Eigen::MatrixXcd lap = dense_laplacian(g, 0.0);
            const Eigen::MatrixXcd a = dense_laplacian(g, q);
            CHECK(std::abs(k.d_eff - (lap * a.inverse()).trace().real()) < 1e-9);
            if (q == 0.0) {
                CHECK((k.kernel * k.kernel - k.kernel).norm() < 1e-8);
                CHECK(std::abs(k.d_eff - g.node_count()) < 1e-8);
                CHECK(std::abs(k.var_edges) < 1e-8);
            }
        }
    }
}

TEST_CASE("n-cycle with inconsistent holonomy at q = 0 has unit scores")
{
    const DppKernel k = exact_kernel(cycle_graph(6, 1.0), 0.0);
    for (int e = 0; e < 6; ++e) {
        CHECK(std::abs(k.leverage(e) - 1.0) < 1e-10);
    }
}

TEST_CASE("d_eff, kappa and their ratio decrease in q")
{
    for (std::uint64_t seed = 20; seed < 25; ++seed) {
        const ConnectionGraph g = random_small_graph(seed, 8, 14);
        double prev_d = 1e300;
        double prev_k = 1e300;
        double prev_r = 1e300;
        Eigen::VectorXd prev_l = Eigen::VectorXd::Constant(g.edge_count(), 2.0);
        for (double q : {0.01, 0.1, 1.0, 10.0}) {
            const DppKernel k = exact_kernel(g, q);
            CHECK(k.d_eff <= prev_d + 1e-12);
            CHECK(k.kappa <= prev_k + 1e-12);
            CHECK(k.intrinsic_ratio() <= prev_r + 1e-12);
            CHECK((k.leverage.array() <= prev_l.array() + 1e-12).all());
            prev_d = k.d_eff;
            prev_k = k.kappa;
            prev_r = k.intrinsic_ratio();
            prev_l = k.leverage;
        }
        CHECK(exact_kernel(g, 1e6).d_eff < 1e-4);
    }
}

TEST_CASE("determinant expansion over MTSFs")
{
    SUBCASE("4-cycle with one inconsistent cycle")
    {
        const ConnectionGraph g = cycle_graph(4, 2.0);
        double sum = 0.0;
        for_each_mtsf(g, 1.0, [&](std::span<const int>, double w) { sum += w; });
        const double det = dense_laplacian(g, 1.0).determinant().real();
        CHECK(std::abs(sum - det) <= 1e-10 * det);
    }
    SUBCASE("random graphs")
    {
        for (std::uint64_t seed = 0; seed < 50; ++seed) {
            const int n = 4 + static_cast<int>(seed % 4);
            const ConnectionGraph g = random_small_graph(1000 + seed, n, 12);
            for (double q : {0.0, 0.5, 2.0}) {
                double sum = 0.0;
                for_each_mtsf(g, q, [&](std::span<const int>, double w) { sum += w; });
                const double det = dense_laplacian(g, q).determinant().real();
                CAPTURE(seed);
                CAPTURE(q);
                CHECK(std::abs(sum - det) <= 1e-8 * std::max(det, 1e-300));
            }
        }
    }
    SUBCASE("size guard")
    {
        std::vector<Edge> edges;
        for (int u = 0; u < 7; ++u) {
            for (int v = u + 1; v < 7; ++v) {
                edges.push_back({u, v, 1.0, 0.1});
            }
        }
        const ConnectionGraph k7(7, std::move(edges));
        CHECK_THROWS_AS(enumerate_mtsfs(k7, 1.0), InvalidInput);
    }
}

TEST_CASE("enumerated probabilities")
{
    const ConnectionGraph tri = cycle_graph(3, pi);
    const auto all = enumerate_mtsfs(tri, 1.0);
    double total = 0.0;
    for (const auto& f : all) {
        total += f.probability;
        const Mtsf forest = mtsf_from_edges(tri, f.edges, 1.0);
        CHECK(std::abs(edge_set_probability(tri, 1.0, forest) - f.probability) < 1e-14);
    }
    CHECK(std::abs(total - 1.0) < 1e-10);

    // Consistent cycle has probability zero.
    const ConnectionGraph flat = cycle_graph(3, 0.0);
    CHECK(mtsf_probability(flat, 1.0, mtsf_from_edges(flat, {0, 1, 2}, 1.0)) < 1e-15);

    // q → 0 with a trivial connection concentrates on the three spanning trees.
    double trees = 0.0;
    for (const auto& f : enumerate_mtsfs(flat, 1e-8)) {
        if (f.edges.size() == 2) {
            CHECK(std::abs(f.probability - 1.0 / 3.0) < 1e-6);
            trees += f.probability;
        }
    }
    CHECK(trees > 1 - 1e-6);
}

TEST_CASE("spanning forests at trivial connection weigh q^{#trees} per rooting")
{
    const ConnectionGraph path(3, {{0, 1, 1.0, 0.0}, {1, 2, 1.0, 0.0}});
    const double q = 0.7;
    for (const auto& f : enumerate_mtsfs(path, q)) {
        const Mtsf forest = mtsf_from_edges(path, f.edges, q);
        double roots = 1.0;
        for (const auto& t : forest.trees) {
            roots *= static_cast<double>(t.edges.size() + 1);
        }
        CHECK(std::abs(f.weight - std::pow(q, forest.tree_count()) * roots) < 1e-14);
        CHECK(std::abs(mtsf_probability(path, q, forest) * roots - f.probability) < 1e-14);
    }
}

TEST_CASE("enumerated marginals reproduce the kernel")
{
    for (std::uint64_t seed = 300; seed < 310; ++seed) {
        const ConnectionGraph g = random_small_graph(seed, 6, 10);
        const double q = 0.4;
        const DppKernel k = exact_kernel(g, q);
        Eigen::VectorXd marginal = Eigen::VectorXd::Zero(g.edge_count());
        Eigen::MatrixXd pair = Eigen::MatrixXd::Zero(g.edge_count(), g.edge_count());
        for (const auto& f : enumerate_mtsfs(g, q)) {
            for (int a : f.edges) {
                marginal(a) += f.probability;
                for (int b : f.edges) {
                    pair(a, b) += f.probability;
                }
            }
        }
        CHECK((marginal - k.leverage).cwiseAbs().maxCoeff() < 1e-10);
        // Pr({a, b} ⊆ F) = det K_{ab}.
        for (int a = 0; a < g.edge_count(); ++a) {
            for (int b = a + 1; b < g.edge_count(); ++b) {
                const double det2 = (k.kernel(a, a) * k.kernel(b, b) - k.kernel(a, b) * k.kernel(b, a)).real();
                CHECK(std::abs(pair(a, b) - det2) < 1e-10);
            }
        }
    }
}

TEST_CASE("expected walk length")
{
    // Triangle, holonomy π/2, q = 0: Tr((Δ)⁻¹ D) = 9 by hand.
    CHECK(std::abs(expected_walk_steps(cycle_graph(3, pi / 2), 0.0) - 9.0) < 1e-10);

    // Trivial connection: E[T] = Tr(D(Λ+qI)⁻¹) + Tr(q(Λ+qI)⁻¹).
    const ConnectionGraph g = random_small_graph(42, 7, 10);
    std::vector<Edge> flat_edges(g.edges().begin(), g.edges().end());
    for (auto& e : flat_edges) {
        e.angle = 0.0;
    }
    const ConnectionGraph flat(7, flat_edges);
    const double q = 0.6;
    const Eigen::MatrixXcd inv = dense_laplacian(flat, q).inverse();
    Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(7, 7);
    for (int v = 0; v < 7; ++v) {
        d(v, v) = flat.degree(v);
    }
    const double formula = (d * inv).trace().real() + (q * inv).trace().real();
    CHECK(std::abs(expected_walk_steps(flat, q) - formula) < 1e-10);

    // q → ∞: every step roots.
    CHECK(std::abs(expected_walk_steps(g, 1e9) - 7.0) < 1e-6);
}
