#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "maglap/errors.hpp"
#include "maglap/generators.hpp"

using namespace maglap;

namespace {

bool is_permutation_of_1_to_n(std::vector<int> h)
{
    std::sort(h.begin(), h.end());
    for (std::size_t i = 0; i < h.size(); ++i) {
        if (h[i] != static_cast<int>(i) + 1) {
            return false;
        }
    }
    return true;
}

// Signed angle in (-π, π].
double centered(double a) { return a > std::numbers::pi ? a - kTwoPi : a; }

} // namespace

TEST_CASE("ER basics")
{
    const ConnectionGraph k4 = gen_er(4, 1.0, 1);
    CHECK(k4.edge_count() == 6);
    CHECK_THROWS_AS(gen_er(5, 0.0, 1), InvalidInput);
    GeneratorOptions accept{ConnectivityPolicy::accept};
    CHECK(gen_er(5, 0.0, 1, accept).edge_count() == 0);
    CHECK_THROWS_AS(gen_er(1, 0.5, 1), InvalidInput);
    CHECK_THROWS_AS(gen_er(5, 1.5, 1), InvalidInput);
}

TEST_CASE("ER edge count is binomial")
{
    const int n = 2000;
    const double p = 0.01;
    const ConnectionGraph g = gen_er(n, p, 2024);
    const double pairs = n * (n - 1) / 2.0;
    const double mean = pairs * p;
    const double sd = std::sqrt(pairs * p * (1 - p));
    CHECK(mean == doctest::Approx(19990.0));
    CHECK(std::abs(g.edge_count() - mean) <= 4 * sd);
    CHECK(g.connected());
}

TEST_CASE("largest component policy relabels consecutively")
{
    GeneratorOptions opts{ConnectivityPolicy::largest_component};
    const PlantedInstance inst = gen_mun(200, 0.01, 0.1, 9, opts);
    CHECK(inst.graph.connected());
    CHECK(inst.graph.node_count() < 200);
    CHECK(static_cast<int>(inst.ranking.size()) == inst.graph.node_count());
    CHECK(is_permutation_of_1_to_n(inst.ranking));
    CHECK(static_cast<int>(inst.outlier.size()) == inst.graph.edge_count());
}

TEST_CASE("generators are deterministic under the seed")
{
    const PlantedInstance a = gen_mun(100, 0.1, 0.2, 5);
    const PlantedInstance b = gen_mun(100, 0.1, 0.2, 5);
    const PlantedInstance c = gen_mun(100, 0.1, 0.2, 6);
    REQUIRE(a.graph.edge_count() == b.graph.edge_count());
    for (int e = 0; e < a.graph.edge_count(); ++e) {
        CHECK(a.graph.edge(e).head == b.graph.edge(e).head);
        CHECK(a.graph.edge(e).tail == b.graph.edge(e).tail);
        CHECK(a.graph.edge(e).angle == b.graph.edge(e).angle);
    }
    CHECK(a.ranking == b.ranking);
    std::set<std::pair<int, int>> ea;
    std::set<std::pair<int, int>> ec;
    for (const Edge& e : a.graph.edges()) {
        ea.insert({e.head, e.tail});
    }
    for (const Edge& e : c.graph.edges()) {
        ec.insert({e.head, e.tail});
    }
    CHECK(ea != ec);
}

TEST_CASE("MUN angle formula and bounds")
{
    const int n = 150;
    const double eta = 0.3;
    const PlantedInstance inst = gen_mun(n, 0.08, eta, 11);
    CHECK(is_permutation_of_1_to_n(inst.ranking));
    for (const Edge& e : inst.graph.edges()) {
        const double theta = centered(e.angle);
        const double base = (inst.ranking[e.head] - inst.ranking[e.tail]) / (std::numbers::pi * (n - 1));
        CHECK(std::abs(theta) <= (1 + eta) / std::numbers::pi + 1e-12);
        // ϑ / base = 1 + η ε with ε in [0, 1].
        const double ratio = theta / base;
        CHECK(ratio >= 1.0 - 1e-9);
        CHECK(ratio <= 1.0 + eta + 1e-9);
    }
}

TEST_CASE("noiseless planted models are consistent and coincide")
{
    const PlantedInstance mun = gen_mun(80, 0.15, 0.0, 3);
    const PlantedInstance ero = gen_ero(80, 0.15, 0.0, 3);
    CHECK_FALSE(mun.graph.nontrivial_connection());
    CHECK_FALSE(ero.graph.nontrivial_connection());
    REQUIRE(mun.graph.edge_count() == ero.graph.edge_count());
    for (int e = 0; e < mun.graph.edge_count(); ++e) {
        CHECK(mun.graph.edge(e).angle == ero.graph.edge(e).angle);
    }
    CHECK(mun.ranking == ero.ranking);
}

TEST_CASE("ERO outliers")
{
    const int n = 60;
    const PlantedInstance all = gen_ero(n, 0.3, 1.0, 4);
    for (std::size_t e = 0; e < all.outlier.size(); ++e) {
        CHECK(all.outlier[e]);
        // ε/(π(n-1)) with integer ε in [-n+1, n-1].
        const double eps = centered(all.graph.edge(static_cast<int>(e)).angle) * std::numbers::pi * (n - 1);
        CHECK(std::abs(eps - std::round(eps)) < 1e-9);
        CHECK(std::abs(eps) <= n - 1 + 1e-9);
    }
    const PlantedInstance some = gen_ero(n, 0.3, 0.25, 4);
    std::size_t count = 0;
    for (bool b : some.outlier) {
        count += b ? 1 : 0;
    }
    const double frac = static_cast<double>(count) / static_cast<double>(some.outlier.size());
    CHECK(frac > 0.1);
    CHECK(frac < 0.4);
    CHECK(some.graph.nontrivial_connection());
    CHECK_THROWS_AS(gen_ero(n, 0.3, 1.5, 4), InvalidInput);
}

TEST_CASE("barbell shape")
{
    const PlantedInstance b = gen_barbell(500, 0.0, 1);
    CHECK(b.graph.edge_count() == 62251);
    CHECK(b.graph.connected());
    CHECK_FALSE(b.graph.nontrivial_connection());
    CHECK(b.graph.find_edge(249, 250).has_value());
    CHECK_FALSE(b.graph.find_edge(0, 499).has_value());
    CHECK_THROWS_AS(gen_barbell(7, 0.0, 1), InvalidInput);
    CHECK(gen_barbell(20, 0.5, 2).graph.nontrivial_connection());
}

TEST_CASE("attach_connection keeps topology and weights")
{
    const ConnectionGraph topo(4, {{0, 1, 2.0, 0.0}, {1, 2, 1.0, 0.0}, {2, 3, 1.0, 0.0}, {3, 0, 1.0, 0.0}});
    const PlantedInstance clean = attach_connection(topo, NoiseModel::mun, 0.0, 8);
    CHECK_FALSE(clean.graph.nontrivial_connection());
    CHECK(clean.graph.edge(0).weight == 2.0);
    const PlantedInstance noisy = attach_connection(topo, NoiseModel::outliers, 1.0, 8);
    CHECK(noisy.graph.edge_count() == 4);
    CHECK(noisy.graph.nontrivial_connection());
}
