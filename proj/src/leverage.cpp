#include "maglap/leverage.hpp"

#include <cmath>
#include <numeric>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include "maglap/errors.hpp"
#include "maglap/rng.hpp"

namespace maglap {

namespace {

constexpr double kClipLow = 1e-12;

void require_nonsingular(const ConnectionGraph& g, double q)
{
    if (!(q >= 0.0) || !std::isfinite(q)) {
        throw InvalidInput("q must be a finite nonnegative number");
    }
    if (q == 0.0 && !g.nontrivial_connection()) {
        throw SingularSystem("Δ is singular: q = 0 needs an inconsistent cycle");
    }
}

} // namespace

std::string to_string(LsMethod method)
{
    switch (method) {
    case LsMethod::exact:
        return "exact";
    case LsMethod::uniform:
        return "uniform";
    case LsMethod::jl:
        return "jl";
    }
    return "?";
}

LsMethod parse_ls_method(const std::string& name)
{
    if (name == "exact") {
        return LsMethod::exact;
    }
    if (name == "uniform") {
        return LsMethod::uniform;
    }
    if (name == "jl") {
        return LsMethod::jl;
    }
    throw InvalidInput("unknown leverage-score method '" + name + "' (expected exact, uniform or jl)");
}

double LeverageScores::sum() const { return std::accumulate(values.begin(), values.end(), 0.0); }

LeverageScores exact_ls(const ConnectionGraph& g, double q)
{
    require_nonsingular(g, q);
    const int n = g.node_count();
    if (n > kExactLeverageMaxNodes) {
        throw InvalidInput("exact leverage scores are limited to n <= " + std::to_string(kExactLeverageMaxNodes) +
                           "; use jl or uniform");
    }
    Eigen::MatrixXcd a = Eigen::MatrixXcd(assemble_magnetic_laplacian(g, q).regularized());
    Eigen::LLT<Eigen::MatrixXcd> llt(a);
    if (llt.info() != Eigen::Success) {
        throw SingularSystem("Δ + qI is not numerically positive definite");
    }
    const Eigen::MatrixXcd inv = llt.solve(Eigen::MatrixXcd::Identity(n, n));
    LeverageScores out;
    out.method = LsMethod::exact;
    out.q = q;
    out.values.resize(static_cast<std::size_t>(g.edge_count()));
    for (int e = 0; e < g.edge_count(); ++e) {
        const Edge& ed = g.edge(e);
        const auto [bh, bt] = incidence_row(ed);
        // b A⁻¹ b^* with b supported on {head, tail}.
        const Complex cross = bh * inv(ed.head, ed.tail) * std::conj(bt);
        const double l = inv(ed.head, ed.head).real() + inv(ed.tail, ed.tail).real() + 2.0 * cross.real();
        out.values[static_cast<std::size_t>(e)] = ed.weight * l;
    }
    return out;
}

LeverageScores uniform_ls(int sample_size, int m)
{
    if (m <= 0 || sample_size <= 0 || sample_size > m) {
        throw InvalidInput("uniform scores need 0 < sample_size <= m");
    }
    LeverageScores out;
    out.method = LsMethod::uniform;
    out.values.assign(static_cast<std::size_t>(m), static_cast<double>(sample_size) / m);
    return out;
}

int jl_sketch_width(int m, int n, double q)
{
    const double rows = q > 0.0 ? static_cast<double>(m) + n : static_cast<double>(m);
    return static_cast<int>(std::ceil(40.0 * std::log(rows) + 1.0));
}

LeverageScores jl_ls(const ConnectionGraph& g, double q, std::uint64_t seed, std::optional<int> width)
{
    require_nonsingular(g, q);
    const int n = g.node_count();
    const int m = g.edge_count();
    const int k = width.value_or(jl_sketch_width(m, n, q));
    if (k <= 0) {
        throw InvalidInput("sketch width must be positive");
    }

    using ColMatrix = Eigen::SparseMatrix<Complex>;
    const ColMatrix a(assemble_magnetic_laplacian(g, q).regularized());
    Eigen::SimplicialLLT<ColMatrix> chol(a);
    if (chol.info() != Eigen::Success) {
        throw SingularSystem("sparse Cholesky of Δ + qI failed");
    }

    // Row r of Q is drawn from stream r; edges occupy rows 0..m-1, nodes m..m+n-1.
    const double scale = 1.0 / std::sqrt(static_cast<double>(k));
    const CounterRng master(seed);
    auto rademacher_row = [&](std::uint64_t r, auto&& sink) {
        CounterRng row = master.split(r);
        std::uint64_t bits = 0;
        for (int j = 0; j < k; ++j) {
            if (j % 64 == 0) {
                bits = row();
            }
            sink(j, (bits & 1U) ? scale : -scale);
            bits >>= 1;
        }
    };

    Eigen::MatrixXcd rhs = Eigen::MatrixXcd::Zero(n, k);
    for (int e = 0; e < m; ++e) {
        const Edge& ed = g.edge(e);
        const auto [bh, bt] = incidence_row(ed);
        const double sw = std::sqrt(ed.weight);
        const Complex ch = sw * std::conj(bh);
        const Complex ct = sw * std::conj(bt);
        rademacher_row(static_cast<std::uint64_t>(e), [&](int j, double s) {
            rhs(ed.head, j) += ch * s;
            rhs(ed.tail, j) += ct * s;
        });
    }
    if (q > 0.0) {
        const double sq = std::sqrt(q);
        for (int v = 0; v < n; ++v) {
            rademacher_row(static_cast<std::uint64_t>(m + v), [&](int j, double s) { rhs(v, j) += sq * s; });
        }
    }
    const Eigen::MatrixXcd t = chol.solve(rhs);

    LeverageScores out;
    out.method = LsMethod::jl;
    out.q = q;
    out.sketch_width = k;
    out.values.resize(static_cast<std::size_t>(m));
    for (int e = 0; e < m; ++e) {
        const Edge& ed = g.edge(e);
        const auto [bh, bt] = incidence_row(ed);
        const double l = ed.weight * (bh * t.row(ed.head) + bt * t.row(ed.tail)).squaredNorm();
        double& slot = out.values[static_cast<std::size_t>(e)];
        slot = l;
        if (l < kClipLow) {
            slot = kClipLow;
            ++out.clipped_low;
        } else if (l > 1.0) {
            slot = 1.0;
            ++out.clipped_high;
        }
    }
    return out;
}

} // namespace maglap
