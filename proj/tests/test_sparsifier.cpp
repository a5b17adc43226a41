#include <doctest.h>

#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "maglap/errors.hpp"
#include "maglap/generators.hpp"
#include "maglap/oracle.hpp"
#include "maglap/sparsifier.hpp"

using namespace maglap;

namespace {

ConnectionGraph cycle_graph(int n, double total_angle)
{
    std::vector<Edge> edges;
    for (int v = 0; v < n; ++v) {
        edges.push_back({v, (v + 1) % n, 1.0, total_angle / n});
    }
    return ConnectionGraph(n, std::move(edges));
}

ConnectionGraph path_graph(int n)
{
    std::vector<Edge> edges;
    for (int v = 0; v + 1 < n; ++v) {
        edges.push_back({v, v + 1, 1.0, 0.3});
    }
    return ConnectionGraph(n, std::move(edges));
}

// Triangle 0-1-2 with holonomy 1.1, chord-free 4-cycle 3-4-5-6 hanging off node 2.
ConnectionGraph two_cycles()
{
    return ConnectionGraph(7, {{0, 1, 1.0, 0.5},
                               {1, 2, 1.0, 0.3},
                               {2, 0, 1.0, 0.3},
                               {2, 3, 1.0, 0.2},
                               {3, 4, 1.0, 0.4},
                               {4, 5, 1.0, -0.2},
                               {5, 6, 1.0, 0.9},
                               {6, 3, 1.0, 0.4},
                               {1, 5, 1.0, 0.1}});
}

Eigen::MatrixXcd dense(const MagneticLaplacian& l) { return Eigen::MatrixXcd(l.matrix); }

Eigen::MatrixXcd rank_one_sum(const ConnectionGraph& g, const std::vector<int>& edges, const std::vector<double>& c)
{
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(g.node_count(), g.node_count());
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const Edge& ed = g.edge(edges[i]);
        Eigen::RowVectorXcd b = Eigen::RowVectorXcd::Zero(g.node_count());
        b(ed.head) = std::polar(1.0, -ed.angle / 2);
        b(ed.tail) = -std::polar(1.0, ed.angle / 2);
        out += c[i] * ed.weight * b.adjoint() * b;
    }
    return out;
}

} // namespace

TEST_CASE("the only CRSF of an inconsistent cycle reproduces Δ")
{
    const ConnectionGraph g = cycle_graph(7, 2.0);
    Mtsf f = mtsf_from_edges(g, {0, 1, 2, 3, 4, 5, 6}, 0.0);
    const SparsifierBatch batch = make_batch({f}, exact_ls(g, 0.0), 0.0);
    CHECK((dense(build_sparsifier(g, batch)) - dense_laplacian(g, 0.0)).norm() < 1e-10);
}

TEST_CASE("one-sample estimator is unbiased over the enumerated law")
{
    const ConnectionGraph g = two_cycles();
    for (double q : {0.0, 0.4}) {
        const LeverageScores ls = exact_ls(g, q);
        Eigen::MatrixXcd mean = Eigen::MatrixXcd::Zero(7, 7);
        double total = 0.0;
        for (const EnumeratedMtsf& em : enumerate_mtsfs(g, q)) {
            const Mtsf f = mtsf_from_edges(g, em.edges, q);
            mean += em.probability * dense(build_sparsifier(g, make_batch({f}, ls, q)));
            total += em.probability;
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
        CHECK((mean - dense_laplacian(g, 0.0)).norm() < 1e-9);
    }
}

TEST_CASE("coefficients match an explicit rank-one sum")
{
    const PlantedInstance inst = gen_mun(15, 0.4, 0.3, 2);
    const double q = 0.5;
    const auto samples = sample_batch(inst.graph, q, 4, {}, 11);
    const LeverageScores ls = exact_ls(inst.graph, q);
    const SparsifierBatch batch = make_batch(samples, ls, q);
    std::vector<int> edges;
    std::vector<double> c;
    for (const auto& f : samples) {
        for (int e : f.edges) {
            edges.push_back(e);
            c.push_back(0.25 / ls.values[static_cast<std::size_t>(e)]);
        }
    }
    CHECK((dense(build_sparsifier(inst.graph, batch)) - rank_one_sum(inst.graph, edges, c)).norm() < 1e-10);
    int total = 0;
    for (auto [e, count] : batch.multiplicity) {
        total += count;
    }
    CHECK(static_cast<std::size_t>(total) == batch.total_edges());
}

TEST_CASE("uniform scores scale each sample by m / |F|")
{
    const ConnectionGraph g = two_cycles();
    const auto samples = sample_batch(g, 0.0, 3, {}, 5);
    const SparsifierBatch batch = make_batch(samples, uniform_ls(g.node_count(), g.edge_count()), 0.0);
    std::vector<int> edges;
    std::vector<double> c;
    for (const auto& f : samples) {
        for (int e : f.edges) {
            edges.push_back(e);
            c.push_back(static_cast<double>(g.edge_count()) / (3.0 * f.size()));
        }
    }
    CHECK((dense(build_sparsifier(g, batch)) - rank_one_sum(g, edges, c)).norm() < 1e-10);
}

TEST_CASE("self-normalized estimator equals the plain one when no cycle is capped")
{
    const ConnectionGraph g = two_cycles();
    const auto samples = sample_batch(g, 0.2, 6, {}, 3);
    for (const auto& f : samples) {
        for (const auto& c : f.cycles) {
            REQUIRE(std::cos(c.angle) >= 0.0);
        }
    }
    const LeverageScores ls = exact_ls(g, 0.2);
    const SparsifierBatch plain = make_batch(samples, ls, 0.2);
    const SparsifierBatch sn = make_batch(samples, ls, 0.2, EstimatorKind::self_normalized);
    CHECK((dense(build_sparsifier(g, plain)) - dense(build_self_normalized(g, sn))).norm() < 1e-12);
}

TEST_CASE("self-normalized weights follow the importance weights")
{
    const ConnectionGraph g = cycle_graph(4, 2.8);
    const Mtsf whole = mtsf_from_edges(g, {0, 1, 2, 3}, 0.0);
    REQUIRE(whole.importance_weight() == doctest::Approx(1.0 - std::cos(2.8)));
    const SparsifierBatch b = make_batch({whole, whole}, exact_ls(g, 0.0), 0.0, EstimatorKind::self_normalized);
    CHECK(b.importance[0] == doctest::Approx(1.0 - std::cos(2.8)));
    CHECK((dense(build_self_normalized(g, b)) - dense_laplacian(g, 0.0)).norm() < 1e-10);
}

TEST_CASE("iid baseline weights")
{
    const ConnectionGraph g = two_cycles();
    const std::vector<double> scores{0.5, 0.25, 0.25, 1.0, 0.5, 0.5, 0.5, 0.5, 0.25};
    const std::vector<int> draws{0, 3, 3, 8};
    double sum = 0.0;
    for (double s : scores) {
        sum += s;
    }
    std::vector<double> c;
    for (int e : draws) {
        c.push_back(sum / (4.0 * scores[static_cast<std::size_t>(e)]));
    }
    std::vector<int> edges(draws.begin(), draws.end());
    CHECK((dense(build_iid_sparsifier(g, draws, scores, 0.0)) - rank_one_sum(g, edges, c)).norm() < 1e-12);
    CHECK_THROWS_AS(build_iid_sparsifier(g, std::vector<int>{}, scores, 0.0), InvalidInput);
}

TEST_CASE("batch validation")
{
    const ConnectionGraph g = cycle_graph(5, 1.0);
    CHECK_THROWS_AS(make_batch({}, exact_ls(g, 0.0), 0.0), InvalidInput);
    const Mtsf f = mtsf_from_edges(g, {0, 1, 2, 3, 4}, 0.0);
    CHECK_THROWS_AS(make_batch({f}, uniform_ls(2, 3), 0.0), InvalidInput);
    CHECK_THROWS_AS(sample_batch(g, 0.0, 0, {}, 1), InvalidInput);
}

TEST_CASE("batch sampling is independent of the thread count")
{
    const PlantedInstance inst = gen_mun(60, 0.15, 0.2, 7);
    WalkStats s1;
    WalkStats s4;
    const auto a = sample_batch(inst.graph, 0.3, 9, {}, 42, &s1, 1);
    const auto b = sample_batch(inst.graph, 0.3, 9, {}, 42, &s4, 4);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].edges == b[i].edges);
    }
    CHECK(s1.steps == s4.steps);
    const auto trees = sample_spanning_trees(inst.graph, 3, 1);
    for (const auto& t : trees) {
        CHECK(t.size() == inst.graph.node_count() - 1);
    }
}

TEST_CASE("batch size bound")
{
    // 148 · 2 ln 8 = 615.5
    CHECK(batch_size_bound(1.0, 1.0, 0.5, 0.5) == 616);
    // 37 · 0.2 / 0.01 · 2 ln(4 · 30 / (0.1 · 0.2))
    const double expected = 37.0 * 0.2 / 0.01 * 2.0 * std::log(120.0 / 0.02);
    CHECK(batch_size_bound(30.0, 0.2, 0.1, 0.1) == static_cast<std::int64_t>(std::ceil(expected)));
    const auto coarse = batch_size_bound(30.0, 0.5, 0.4, 0.05);
    const auto fine = batch_size_bound(30.0, 0.5, 0.2, 0.05);
    CHECK(std::abs(static_cast<double>(fine) / static_cast<double>(coarse) - 4.0) < 0.02);
    CHECK_THROWS_AS(batch_size_bound(1.0, 1.0, 1.5, 0.1), InvalidInput);
    CHECK_THROWS_AS(batch_size_bound(1.0, 1.0, 0.5, 0.0), InvalidInput);
    CHECK_THROWS_AS(batch_size_bound(1.0, 0.0, 0.5, 0.1), InvalidInput);
}

TEST_CASE("CLT radius")
{
    const ConnectionGraph g = cycle_graph(4, 2.8);
    const Mtsf whole = mtsf_from_edges(g, {0, 1, 2, 3}, 0.0);
    const SparsifierBatch b = make_batch({whole, whole, whole, whole}, exact_ls(g, 0.0), 0.0,
                                         EstimatorKind::self_normalized);
    const CltDiagnostic d = clt_radius(b, 4, 1, 4.0, 0.95);
    CHECK(d.omega == doctest::Approx(64.0));
    CHECK(d.z == doctest::Approx(1.959964).epsilon(1e-6));
    CHECK(d.radius == doctest::Approx(1.959964 * 4.0).epsilon(1e-6));
    // χ² with 4 degrees of freedom: 9.487729 at 0.95.
    CHECK(clt_radius(b, 4, 2, 4.0).z == doctest::Approx(std::sqrt(9.487729)).epsilon(1e-6));
}

TEST_CASE("MTSF Cholesky reconstructs the sparsifier and meets the fill bound")
{
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
        const PlantedInstance inst = gen_mun(40, 0.12, 0.5, seed);
        const double q = seed % 2 == 0 ? 0.0 : 0.3;
        CounterRng rng(seed);
        const Mtsf f = cycle_popping(inst.graph, q, rng, {WeightMode::capped});
        std::vector<double> scale(static_cast<std::size_t>(inst.graph.edge_count()));
        for (std::size_t e = 0; e < scale.size(); ++e) {
            scale[e] = 1.0 + 0.1 * static_cast<double>(e % 5);
        }
        const CholeskyFactor r = cholesky_mtsf(inst.graph, f, q, scale);
        std::vector<double> c;
        for (int e : f.edges) {
            c.push_back(scale[static_cast<std::size_t>(e)]);
        }
        Eigen::MatrixXcd target = rank_one_sum(inst.graph, f.edges, c);
        target.diagonal().array() += q;
        Eigen::MatrixXcd p = Eigen::MatrixXcd::Zero(40, 40);
        for (int i = 0; i < 40; ++i) {
            p(i, r.perm[static_cast<std::size_t>(i)]) = 1.0;
        }
        const Eigen::MatrixXcd rd(r.upper);
        CHECK(rd.isUpperTriangular());
        CHECK((rd.adjoint() * rd - p * target * p.transpose()).norm() < 1e-9 * target.norm());
        CHECK(r.offdiag_nonzeros <= cholesky_fill_bound(f, 40));

        Eigen::VectorXcd b = Eigen::VectorXcd::Zero(40);
        for (int i = 0; i < 40; ++i) {
            b(i) = Complex(std::sin(i + 1.0), std::cos(3.0 * i));
        }
        std::uint64_t ops = 0;
        const Vector x = solve_factored(r, b, &ops);
        CHECK((target * x - b).norm() < 1e-9 * b.norm());
        CHECK(ops > 0);
    }
}

TEST_CASE("fill bound on a path and a cycle")
{
    const ConnectionGraph path = path_graph(10);
    const Mtsf tree = mtsf_from_edges(path, {0, 1, 2, 3, 4, 5, 6, 7, 8}, 1.0);
    const CholeskyFactor r = cholesky_mtsf(path, tree, 1.0);
    CHECK(cholesky_fill_bound(tree, 10) == 9);
    CHECK(r.offdiag_nonzeros == 9);
    CHECK_THROWS_AS(cholesky_mtsf(path, tree, 0.0), SingularSystem);

    const ConnectionGraph ring = cycle_graph(6, 2.0);
    const Mtsf crt = mtsf_from_edges(ring, {0, 1, 2, 3, 4, 5}, 0.0);
    CHECK(cholesky_fill_bound(crt, 6) == 9);
    CHECK(cholesky_mtsf(ring, crt, 0.0).offdiag_nonzeros <= 9);
}

TEST_CASE("factor and solve costs grow linearly in n")
{
    auto cost = [](int n) {
        const ConnectionGraph g = cycle_graph(n, 1.5);
        const Mtsf f = mtsf_from_edges(g, [&] {
            std::vector<int> all(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) {
                all[static_cast<std::size_t>(i)] = i;
            }
            return all;
        }(), 0.0);
        const CholeskyFactor r = cholesky_mtsf(g, f, 0.0);
        std::uint64_t ops = 0;
        solve_factored(r, Vector::Ones(n), &ops);
        return std::pair<double, double>(static_cast<double>(r.factor_operations), static_cast<double>(ops));
    };
    const auto [f1, s1] = cost(1000);
    const auto [f4, s4] = cost(4000);
    CHECK(f4 / f1 == doctest::Approx(4.0).epsilon(0.01));
    CHECK(s4 / s1 == doctest::Approx(4.0).epsilon(0.01));
}
