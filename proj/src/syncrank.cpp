#include "maglap/syncrank.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>

#include "maglap/errors.hpp"
#include "maglap/rng.hpp"
#include "maglap/sparsifier.hpp"

namespace maglap {

namespace {

int sign(double x) { return (x > 0.0) - (x < 0.0); }

double to_signed(double angle)
{
    const double a = wrap_angle(angle);
    return a > std::numbers::pi ? a - kTwoPi : a;
}

void require_permutation(std::span<const int> r, const char* what)
{
    const int n = static_cast<int>(r.size());
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    for (int x : r) {
        if (x < 1 || x > n || seen[static_cast<std::size_t>(x - 1)]) {
            throw InvalidInput(std::string(what) + " is not a permutation of 1.." + std::to_string(n));
        }
        seen[static_cast<std::size_t>(x - 1)] = 1;
    }
}

} // namespace

ConnectionGraph embed_comparisons(int n, std::span<const Comparison> comparisons)
{
    if (n < 2) {
        throw InvalidInput("ranking needs at least two items");
    }
    const double bound = n - 1;
    std::map<std::pair<int, int>, double> pairs;
    for (const Comparison& c : comparisons) {
        if (c.u < 0 || c.u >= n || c.v < 0 || c.v >= n || c.u == c.v) {
            throw InvalidInput("comparison (" + std::to_string(c.u) + ", " + std::to_string(c.v) + ") has invalid items");
        }
        if (!std::isfinite(c.kappa) || std::abs(c.kappa) > bound) {
            throw InvalidInput("comparison (" + std::to_string(c.u) + ", " + std::to_string(c.v) + ") has kappa " +
                               std::to_string(c.kappa) + " outside [-" + std::to_string(n - 1) + ", " +
                               std::to_string(n - 1) + "]");
        }
        const bool forward = c.u < c.v;
        const std::pair<int, int> key = forward ? std::pair{c.u, c.v} : std::pair{c.v, c.u};
        const double k = forward ? c.kappa : -c.kappa;
        const auto [it, fresh] = pairs.emplace(key, k);
        if (!fresh && std::abs(it->second - k) > 1e-12 * std::max(1.0, std::abs(k))) {
            throw InvalidInput("comparisons of " + std::to_string(key.first) + " and " + std::to_string(key.second) +
                               " are not antisymmetric");
        }
    }
    std::vector<Edge> edges;
    edges.reserve(pairs.size());
    for (const auto& [key, k] : pairs) {
        edges.push_back({key.first, key.second, 1.0, std::numbers::pi * k / bound});
    }
    return ConnectionGraph(n, std::move(edges));
}

std::vector<Comparison> comparisons_from_graph(const ConnectionGraph& g)
{
    std::vector<Comparison> out;
    out.reserve(static_cast<std::size_t>(g.edge_count()));
    for (const Edge& e : g.edges()) {
        out.push_back({e.head, e.tail, to_signed(e.angle)});
    }
    return out;
}

ConnectionGraph degree_normalize(const ConnectionGraph& g)
{
    std::vector<Edge> edges(g.edges().begin(), g.edges().end());
    for (Edge& e : edges) {
        e.weight /= std::sqrt(static_cast<double>(g.degree(e.head)) * g.degree(e.tail));
    }
    return ConnectionGraph(g.node_count(), std::move(edges));
}

std::string to_string(EigenMode mode)
{
    switch (mode) {
    case EigenMode::exact:
        return "exact";
    case EigenMode::sparsify_and_eigensolve:
        return "sparsify-and-eigensolve";
    case EigenMode::sparsify_and_precondition:
        return "sparsify-and-precondition";
    }
    return "?";
}

EigenMode parse_eigen_mode(const std::string& name)
{
    for (EigenMode m : {EigenMode::exact, EigenMode::sparsify_and_eigensolve, EigenMode::sparsify_and_precondition}) {
        if (name == to_string(m)) {
            return m;
        }
    }
    throw InvalidInput("unknown eigensolver mode '" + name +
                       "' (expected exact, sparsify-and-eigensolve or sparsify-and-precondition)");
}

std::vector<double> angular_scores(const Vector& f)
{
    std::vector<double> out(static_cast<std::size_t>(f.size()));
    for (int u = 0; u < f.size(); ++u) {
        out[static_cast<std::size_t>(u)] = f(u) == Complex(0.0) ? 0.0 : wrap_angle(std::arg(f(u)));
    }
    return out;
}

SpectralScores spectral_scores(const ConnectionGraph& g, SpectralOptions options)
{
    if (!g.connected()) {
        throw InvalidInput("spectral ranking needs a connected comparison graph");
    }
    const ConnectionGraph normalized = degree_normalize(g);
    const SparseMatrix delta = assemble_magnetic_laplacian(normalized).matrix;
    SpectralScores out;
    if (options.mode == EigenMode::exact) {
        out.eigen = least_eigenpair(delta);
    } else {
        if (options.batches < 1) {
            throw InvalidInput("sparsifying modes need at least one batch");
        }
        const ConnectionGraph unit = with_unit_weights(g);
        WalkStats stats;
        auto samples =
            sample_batch(unit, 0.0, options.batches, {WeightMode::capped}, options.seed, &stats, options.threads);
        for (const auto& f : samples) {
            out.cycles_sampled += static_cast<int>(f.cycles.size());
        }
        LeverageScores ls;
        switch (options.ls) {
        case LsMethod::exact:
            ls = exact_ls(unit, 0.0);
            break;
        case LsMethod::jl:
            ls = jl_ls(unit, 0.0, derive_key(options.seed, 0x6a6c));
            break;
        case LsMethod::uniform:
            ls.method = LsMethod::uniform;
            ls.values.assign(static_cast<std::size_t>(g.edge_count()), 1.0);
            break;
        }
        const SparsifierBatch batch = make_batch(std::move(samples), std::move(ls), 0.0, EstimatorKind::self_normalized);
        out.sparsifier_edges = static_cast<int>(batch.multiplicity.size());
        const SparseMatrix sparse = build_self_normalized(normalized, batch).matrix;
        const EigenResult approx = least_eigenpair(sparse);
        if (options.mode == EigenMode::sparsify_and_eigensolve) {
            out.eigen = approx;
        } else {
            const auto m = make_sparsifier_preconditioner(normalized, batch);
            out.eigen = least_eigenpair(delta, m.get(), approx.lambda);
        }
    }
    out.angles = angular_scores(out.eigen.vector);
    // Circular spread: every score equal up to rounding means no ordering information.
    double spread = 0.0;
    for (double a : out.angles) {
        spread = std::max(spread, std::abs(to_signed(a - out.angles.front())));
    }
    out.degenerate = out.eigen.degenerate || spread <= 1e-9;
    return out;
}

std::vector<int> ranks_from_scores(std::span<const double> scores)
{
    const int n = static_cast<int>(scores.size());
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)];
    });
    std::vector<int> ranks(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        ranks[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = i + 1;
    }
    return ranks;
}

int shift_rank(int rank, int shift, int n) { return 1 + (rank - 1 + shift) % n; }

long long count_upsets(std::span<const int> ranks, std::span<const Comparison> comparisons, int shift)
{
    const int n = static_cast<int>(ranks.size());
    long long total = 0;
    for (const Comparison& c : comparisons) {
        const int ru = shift_rank(ranks[static_cast<std::size_t>(c.u)], shift, n);
        const int rv = shift_rank(ranks[static_cast<std::size_t>(c.v)], shift, n);
        total += std::abs(sign(c.kappa) - sign(static_cast<double>(rv - ru)));
    }
    return total;
}

ShiftResult best_circular_shift(std::span<const int> ranks, std::span<const Comparison> comparisons)
{
    require_permutation(ranks, "rank vector");
    const int n = static_cast<int>(ranks.size());
    ShiftResult out;
    out.upsets_per_shift.resize(static_cast<std::size_t>(n));
    for (int s = 0; s < n; ++s) {
        const long long u = count_upsets(ranks, comparisons, s);
        out.upsets_per_shift[static_cast<std::size_t>(s)] = u;
        if (s == 0 || u < out.upsets) {
            out.upsets = u;
            out.shift = s;
        }
    }
    return out;
}

double kendall_tau(std::span<const int> r1, std::span<const int> r2)
{
    if (r1.size() != r2.size()) {
        throw InvalidInput("rankings have different lengths");
    }
    require_permutation(r1, "first ranking");
    require_permutation(r2, "second ranking");
    const std::size_t n = r1.size();
    if (n < 2) {
        return 1.0;
    }
    long long score = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            score += sign(static_cast<double>(r1[i] - r1[j])) * sign(static_cast<double>(r2[i] - r2[j]));
        }
    }
    return static_cast<double>(score) / (0.5 * static_cast<double>(n) * static_cast<double>(n - 1));
}

std::vector<int> planted_ranks(std::span<const int> h)
{
    require_permutation(h, "planted scores");
    const int n = static_cast<int>(h.size());
    std::vector<int> out;
    out.reserve(h.size());
    for (int x : h) {
        out.push_back(n + 1 - x);
    }
    return out;
}

RankingResult rank_from_scores(std::span<const double> angles, std::span<const Comparison> comparisons,
                               std::span<const int> reference)
{
    RankingResult out;
    out.angles.assign(angles.begin(), angles.end());
    out.induced = ranks_from_scores(angles);
    const ShiftResult best = best_circular_shift(out.induced, comparisons);
    out.shift = best.shift;
    out.upsets = best.upsets;
    const int n = static_cast<int>(angles.size());
    out.ranks.reserve(out.induced.size());
    for (int r : out.induced) {
        out.ranks.push_back(shift_rank(r, best.shift, n));
    }
    if (!reference.empty()) {
        out.tau = kendall_tau(out.ranks, reference);
    }
    return out;
}

RankingResult syncrank(const ConnectionGraph& g, std::span<const Comparison> comparisons, SpectralOptions options,
                       std::span<const int> reference)
{
    const SpectralScores scores = spectral_scores(g, options);
    RankingResult out = rank_from_scores(scores.angles, comparisons, reference);
    out.degenerate = scores.degenerate;
    return out;
}

} // namespace maglap
