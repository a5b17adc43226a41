#include <doctest.h>

#include <numbers>
#include <sstream>

#include <Eigen/Dense>

#include "maglap/errors.hpp"
#include "maglap/generators.hpp"
#include "maglap/graph.hpp"
#include "maglap/rng.hpp"

using namespace maglap;

namespace {

constexpr double pi = std::numbers::pi;

// Δ built from the quadratic form f*Δf = Σ w|f(u) - e^{iϑ}f(v)|² by polarization on unit vectors.
Eigen::MatrixXcd quadratic_form_matrix(const ConnectionGraph& g)
{
    const int n = g.node_count();
    auto form = [&](const Eigen::VectorXcd& f) {
        double s = 0.0;
        for (const Edge& e : g.edges()) {
            s += e.weight * std::norm(f(e.head) - std::polar(1.0, e.angle) * f(e.tail));
        }
        return s;
    };
    Eigen::MatrixXcd m(n, n);
    const Complex i(0.0, 1.0);
    for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
            Eigen::VectorXcd ea = Eigen::VectorXcd::Unit(n, a);
            Eigen::VectorXcd eb = Eigen::VectorXcd::Unit(n, b);
            // e_a^* M e_b = 1/4 Σ_k i^{-k} form(e_a + i^k e_b) for Hermitian M, sesquilinear in the first slot.
            Complex acc = 0.0;
            Complex ik = 1.0;
            for (int k = 0; k < 4; ++k) {
                acc += std::conj(ik) * form(ea + ik * eb);
                ik *= i;
            }
            m(a, b) = acc / 4.0;
        }
    }
    return m;
}

ConnectionGraph random_graph(std::uint64_t seed, int n, double p)
{
    CounterRng rng(seed);
    std::vector<Edge> edges;
    for (int u = 0; u < n; ++u) {
        for (int v = u + 1; v < n; ++v) {
            if (rng.uniform() < p) {
                edges.push_back({u, v, 0.5 + rng.uniform(), kTwoPi * rng.uniform()});
            }
        }
    }
    return ConnectionGraph(n, std::move(edges));
}

Eigen::MatrixXcd dense(const SparseMatrix& s) { return Eigen::MatrixXcd(s); }

} // namespace

TEST_CASE("wrap_angle reduces into [0, 2pi)")
{
    CHECK(wrap_angle(0.0) == 0.0);
    CHECK(wrap_angle(-pi / 2) == doctest::Approx(3 * pi / 2));
    CHECK(wrap_angle(5 * pi) == doctest::Approx(pi));
    const double w = wrap_angle(-1e-18);
    CHECK(w >= 0.0);
    CHECK(w < kTwoPi);
}

TEST_CASE("graph construction validates simplicity and weights")
{
    CHECK_THROWS_AS(ConnectionGraph(2, {{0, 0, 1.0, 0.0}}), InvalidInput);
    CHECK_THROWS_AS(ConnectionGraph(2, {{0, 1, 1.0, 0.0}, {1, 0, 1.0, 0.0}}), InvalidInput);
    CHECK_THROWS_AS(ConnectionGraph(2, {{0, 1, 0.0, 0.0}}), InvalidInput);
    CHECK_THROWS_AS(ConnectionGraph(2, {{0, 2, 1.0, 0.0}}), InvalidInput);
    const ConnectionGraph g(3, {{0, 1, 1.0, 0.3}});
    CHECK_FALSE(g.connected());
    CHECK(g.component_count() == 2);
}

TEST_CASE("reverse orientation conjugates the phase")
{
    const ConnectionGraph g(2, {{0, 1, 1.0, 0.7}});
    CHECK(g.oriented_angle(0, 0) == doctest::Approx(0.7));
    CHECK(std::cos(g.oriented_angle(0, 1)) == doctest::Approx(std::cos(-0.7)));
    CHECK(std::sin(g.oriented_angle(0, 1)) == doctest::Approx(std::sin(-0.7)));
}

TEST_CASE("magnetic laplacian small cases")
{
    SUBCASE("trivial connection on one edge")
    {
        const ConnectionGraph g(2, {{0, 1, 1.0, 0.0}});
        Eigen::MatrixXcd d = dense(assemble_magnetic_laplacian(g).matrix);
        CHECK(std::abs(d(0, 0) - 1.0) < 1e-15);
        CHECK(std::abs(d(0, 1) + 1.0) < 1e-15);
        CHECK(std::abs(d(1, 0) + 1.0) < 1e-15);
    }
    SUBCASE("phase pi on one edge")
    {
        const ConnectionGraph g(2, {{0, 1, 1.0, pi}});
        Eigen::MatrixXcd d = dense(assemble_magnetic_laplacian(g).matrix);
        CHECK(std::abs(d(0, 1) - 1.0) < 1e-15);
        CHECK(std::abs(d(1, 0) - 1.0) < 1e-15);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(d);
        CHECK(std::abs(es.eigenvalues()(0)) < 1e-14);
        CHECK(std::abs(es.eigenvalues()(1) - 2.0) < 1e-14);
    }
    SUBCASE("triangle with holonomy pi against the quadratic-form oracle")
    {
        const ConnectionGraph g(3, {{0, 1, 1.0, pi / 3}, {1, 2, 1.0, pi / 3}, {2, 0, 1.0, pi / 3}});
        Eigen::MatrixXcd d = dense(assemble_magnetic_laplacian(g).matrix);
        Eigen::MatrixXcd oracle = quadratic_form_matrix(g);
        CHECK((d - oracle).norm() < 1e-12);
        const double lmin = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(d).eigenvalues()(0);
        const double lmin_oracle = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(oracle).eigenvalues()(0);
        CHECK(std::abs(lmin - lmin_oracle) < 1e-10);
        // Circulant with holonomy π: eigenvalues 2 - 2cos((π + 2πk)/3), minimum 1.
        CHECK(std::abs(lmin - 1.0) < 1e-10);
    }
}

TEST_CASE("laplacian invariants on random graphs")
{
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const ConnectionGraph g = random_graph(seed, 9, 0.45);
        const double q = 0.3;
        const MagneticLaplacian lap = assemble_magnetic_laplacian(g, q);
        Eigen::MatrixXcd d = dense(lap.matrix);
        Eigen::MatrixXcd dq = dense(lap.regularized());
        CAPTURE(seed);
        CHECK((d - d.adjoint()).norm() < 1e-14);
        CHECK((dq - d - q * Eigen::MatrixXcd::Identity(9, 9)).norm() < 1e-14);
        CHECK((d - quadratic_form_matrix(g)).norm() < 1e-10);
        for (int v = 0; v < 9; ++v) {
            CHECK(std::abs(d(v, v) - g.weighted_degree(v)) < 1e-14);
        }
        for (const Edge& e : g.edges()) {
            CHECK(std::abs(d(e.head, e.tail) + e.weight * std::polar(1.0, e.angle)) < 1e-14);
        }
        const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(d).eigenvalues();
        CHECK(ev(0) >= -1e-10 * ev.cwiseAbs().maxCoeff());

        // B*WB reproduces Δ.
        const IncidenceOperator inc = assemble_incidence(g);
        Eigen::MatrixXcd b = dense(inc.twisted);
        Eigen::VectorXd w(g.edge_count());
        for (int e = 0; e < g.edge_count(); ++e) {
            w(e) = g.edge(e).weight;
        }
        CHECK((b.adjoint() * w.asDiagonal() * b - d).norm() < 1e-12);
    }
}

TEST_CASE("zero angles reduce the magnetic laplacian to the combinatorial one")
{
    const ConnectionGraph g = gen_er(30, 0.2, 5);
    Eigen::MatrixXcd a = dense(assemble_magnetic_laplacian(g, 0.0).matrix);
    Eigen::MatrixXcd b = dense(assemble_combinatorial_laplacian(g, 0.0).matrix);
    CHECK((a - b).norm() == 0.0);
    CHECK((b * Eigen::VectorXcd::Ones(30)).norm() < 1e-12);
    const IncidenceOperator inc = assemble_incidence(g);
    Eigen::MatrixXcd tw = dense(inc.twisted);
    Eigen::MatrixXd b0 = Eigen::MatrixXd(inc.oriented);
    CHECK((tw.real() - b0).norm() < 1e-14);
    CHECK(tw.imag().norm() < 1e-14);
}

TEST_CASE("spanning trees carry trivializable connections")
{
    CounterRng rng(77);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 12;
        std::vector<Edge> edges;
        for (int v = 1; v < n; ++v) {
            edges.push_back({static_cast<int>(rng.below(static_cast<std::uint64_t>(v))), v, 1.0, kTwoPi * rng.uniform()});
        }
        const ConnectionGraph tree(n, std::move(edges));
        CHECK_FALSE(tree.nontrivial_connection());
        Eigen::MatrixXcd d = dense(assemble_magnetic_laplacian(tree).matrix);
        CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(d).eigenvalues()(0) < 1e-10);
    }
}

TEST_CASE("quadratic form identity with half angles")
{
    for (std::uint64_t seed = 100; seed < 110; ++seed) {
        const ConnectionGraph g = random_graph(seed, 10, 0.5);
        CounterRng rng(seed);
        Eigen::VectorXd h(10);
        Eigen::VectorXcd f(10);
        for (int v = 0; v < 10; ++v) {
            h(v) = kTwoPi * rng.uniform();
            f(v) = std::polar(1.0, h(v));
        }
        Eigen::MatrixXcd d = dense(assemble_magnetic_laplacian(g).matrix);
        const double form = (f.adjoint() * d * f)(0).real();
        double direct = 0.0;
        double sines = 0.0;
        for (const Edge& e : g.edges()) {
            direct += e.weight * std::norm(f(e.head) - std::polar(1.0, e.angle) * f(e.tail));
            const double s = std::sin((e.angle + h(e.tail) - h(e.head)) / 2);
            sines += 4 * e.weight * s * s;
        }
        CHECK(std::abs(form - direct) <= 1e-8 * std::max(1.0, direct));
        CHECK(std::abs(form - sines) <= 1e-8 * std::max(1.0, direct));
    }
}

TEST_CASE("holonomy")
{
    const ConnectionGraph g(3, {{0, 1, 1.0, pi / 3}, {1, 2, 1.0, pi / 3}, {2, 0, 1.0, pi / 3}});
    const std::vector<int> forward{0, 1, 2};
    const std::vector<int> backward{2, 1, 0};
    const Holonomy h = holonomy(g, forward);
    CHECK(h.angle == doctest::Approx(pi));
    CHECK(h.weight == doctest::Approx(4.0));
    CHECK(holonomy(g, backward).weight == doctest::Approx(4.0));

    const ConnectionGraph consistent(3, {{0, 1, 1.0, 1.0}, {1, 2, 1.0, 2.0}, {0, 2, 1.0, 3.0}});
    CHECK(holonomy(consistent, forward).weight < 1e-12);
    CHECK_FALSE(consistent.nontrivial_connection());
    CHECK(g.nontrivial_connection());

    const std::vector<int> repeated{0, 1, 0};
    const std::vector<int> two{0, 1};
    CHECK_THROWS_AS(holonomy(g, repeated), InvalidInput);
    CHECK_THROWS_AS(holonomy(g, two), InvalidInput);
    const ConnectionGraph path(3, {{0, 1, 1.0, 0.0}, {1, 2, 1.0, 0.0}});
    CHECK_THROWS_AS(holonomy(path, forward), InvalidInput);
}

TEST_CASE("edge list round trip and diagnostics")
{
    const ConnectionGraph g = random_graph(3, 8, 0.5);
    std::stringstream buf;
    write_edge_list(buf, g, "round trip");
    const ConnectionGraph back = read_edge_list(buf);
    REQUIRE(back.node_count() == g.node_count());
    REQUIRE(back.edge_count() == g.edge_count());
    for (int e = 0; e < g.edge_count(); ++e) {
        CHECK(back.edge(e).head == g.edge(e).head);
        CHECK(back.edge(e).tail == g.edge(e).tail);
        CHECK(back.edge(e).weight == g.edge(e).weight);
        CHECK(back.edge(e).angle == g.edge(e).angle);
    }

    std::istringstream dup("0 1 1 0\n# comment\n1 2 1 0\n1 0 1 0.5\n");
    try {
        read_edge_list(dup);
        FAIL("duplicate accepted");
    } catch (const InvalidInput& err) {
        const std::string what = err.what();
        CHECK(what.find("line 4") != std::string::npos);
        CHECK(what.find("line 1") != std::string::npos);
    }
    std::istringstream loop("0 0 1 0\n");
    CHECK_THROWS_AS(read_edge_list(loop), InvalidInput);
    std::istringstream junk("0 1 x 0\n");
    CHECK_THROWS_AS(read_edge_list(junk), InvalidInput);
    std::istringstream isolated("# nodes 5\n0 1 1 0\n");
    CHECK(read_edge_list(isolated).node_count() == 5);
}
