#include "maglap/sparsifier.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <thread>

#include <boost/math/distributions/chi_squared.hpp>

#include "maglap/errors.hpp"

namespace maglap {

std::size_t SparsifierBatch::total_edges() const noexcept
{
    std::size_t s = 0;
    for (const auto& f : samples) {
        s += f.edges.size();
    }
    return s;
}

SparsifierBatch make_batch(std::vector<Mtsf> samples, LeverageScores ls, double q, EstimatorKind kind)
{
    if (samples.empty()) {
        throw InvalidInput("a sparsifier batch needs t >= 1 samples");
    }
    SparsifierBatch b;
    b.q = q;
    b.kind = kind;
    std::map<int, int> count;
    for (const auto& f : samples) {
        for (int e : f.edges) {
            if (e < 0 || e >= ls.edge_count()) {
                throw InvalidInput("sample edge " + std::to_string(e) + " has no leverage score");
            }
            ++count[e];
        }
        b.importance.push_back(kind == EstimatorKind::self_normalized ? f.importance_weight() : 1.0);
    }
    b.multiplicity.assign(count.begin(), count.end());
    b.samples = std::move(samples);
    b.ls = std::move(ls);
    return b;
}

std::vector<Mtsf> sample_batch(const ConnectionGraph& g, double q, int t, CyclePoppingOptions options,
                               std::uint64_t seed, WalkStats* stats, int threads)
{
    if (t < 1) {
        throw InvalidInput("batch size must be at least 1");
    }
    std::vector<Mtsf> out(static_cast<std::size_t>(t));
    std::vector<WalkStats> per(static_cast<std::size_t>(t));
    const CounterRng master(seed);
    const int workers = std::clamp(threads, 1, t);
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_lock;
    auto work = [&] {
        try {
            CyclePopper popper(g, q, options);
            for (int l = next++; l < t; l = next++) {
                CounterRng rng = master.split(static_cast<std::uint64_t>(l));
                out[static_cast<std::size_t>(l)] = popper.sample(rng, &per[static_cast<std::size_t>(l)]);
            }
        } catch (...) {
            std::lock_guard lock(failure_lock);
            failure = std::current_exception();
            next = t;
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back(work);
        }
        for (auto& th : pool) {
            th.join();
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
    if (stats != nullptr) {
        for (const auto& s : per) {
            *stats += s;
        }
    }
    return out;
}

std::vector<Mtsf> sample_spanning_trees(const ConnectionGraph& g, int t, std::uint64_t seed, WalkStats* stats)
{
    if (t < 1) {
        throw InvalidInput("batch size must be at least 1");
    }
    std::vector<Mtsf> out;
    const CounterRng master(seed);
    for (int l = 0; l < t; ++l) {
        CounterRng rng = master.split(static_cast<std::uint64_t>(l));
        out.push_back(wilson_st(g, rng, stats));
    }
    return out;
}

std::vector<std::pair<int, double>> sparsifier_coefficients(const SparsifierBatch& batch, EstimatorKind kind)
{
    double total = 0.0;
    for (int l = 0; l < batch.t(); ++l) {
        total += kind == EstimatorKind::self_normalized ? batch.samples[static_cast<std::size_t>(l)].importance_weight() : 1.0;
    }
    std::map<int, double> coeff;
    for (const auto& f : batch.samples) {
        const double a = (kind == EstimatorKind::self_normalized ? f.importance_weight() : 1.0) / total;
        for (int e : f.edges) {
            const double l = batch.ls.value(e, f.size());
            if (!(l > 0.0)) {
                throw InvalidInput("sampled edge " + std::to_string(e) + " has zero leverage score");
            }
            coeff[e] += a / l;
        }
    }
    return {coeff.begin(), coeff.end()};
}

MagneticLaplacian build_sparsifier(const ConnectionGraph& g, const SparsifierBatch& batch)
{
    const auto c = sparsifier_coefficients(batch, EstimatorKind::plain);
    return {assemble_edge_laplacian(g, c, true), batch.q};
}

MagneticLaplacian build_self_normalized(const ConnectionGraph& g, const SparsifierBatch& batch)
{
    const auto c = sparsifier_coefficients(batch, EstimatorKind::self_normalized);
    return {assemble_edge_laplacian(g, c, true), batch.q};
}

MagneticLaplacian build_iid_sparsifier(const ConnectionGraph& g, std::span<const int> draws,
                                       std::span<const double> scores, double q)
{
    if (draws.empty()) {
        throw InvalidInput("the i.i.d. sparsifier needs at least one draw");
    }
    double sum = 0.0;
    for (double s : scores) {
        sum += s;
    }
    std::map<int, double> coeff;
    const double s = static_cast<double>(draws.size());
    for (int e : draws) {
        const double l = scores[static_cast<std::size_t>(e)];
        if (!(l > 0.0)) {
            throw InvalidInput("drawn edge " + std::to_string(e) + " has zero score");
        }
        coeff[e] += sum / (s * l);
    }
    const std::vector<std::pair<int, double>> c(coeff.begin(), coeff.end());
    return {assemble_edge_laplacian(g, c, true), q};
}

std::int64_t batch_size_bound(double d_eff, double kappa, double epsilon, double delta)
{
    if (!(epsilon > 0.0 && epsilon < 1.0)) {
        throw InvalidInput("epsilon must lie in (0, 1)");
    }
    if (!(delta > 0.0 && delta < 1.0)) {
        throw InvalidInput("delta must lie in (0, 1)");
    }
    if (!(kappa > 0.0 && kappa <= 1.0 + 1e-12)) {
        throw InvalidInput("kappa must lie in (0, 1]");
    }
    if (!(d_eff >= kappa * (1.0 - 1e-12))) {
        throw InvalidInput("d_eff must be at least kappa");
    }
    const double branch = std::max(2.0 * std::log(4.0 * d_eff / (delta * kappa)), std::sqrt(3.0));
    return static_cast<std::int64_t>(std::ceil(37.0 * kappa / (epsilon * epsilon) * branch));
}

CltDiagnostic clt_radius(const SparsifierBatch& batch, int m, int n, double d_eff, double confidence)
{
    if (!(confidence > 0.0 && confidence < 1.0)) {
        throw InvalidInput("confidence must lie in (0, 1)");
    }
    double s1 = 0.0;
    double s2 = 0.0;
    for (const auto& f : batch.samples) {
        const double w = f.importance_weight();
        s1 += w;
        s2 += w * w;
    }
    const double t = batch.t();
    CltDiagnostic out;
    out.omega = (s2 / t) / ((s1 / t) * (s1 / t)) * (m + d_eff) * (m + d_eff);
    const boost::math::chi_squared chi(static_cast<double>(n) * n);
    out.z = std::sqrt(boost::math::quantile(chi, confidence));
    out.radius = out.z * std::sqrt(out.omega / t);
    return out;
}

int cholesky_fill_bound(const Mtsf& forest, int node_count)
{
    int bound = node_count - forest.tree_count();
    for (const auto& c : forest.cycles) {
        bound += static_cast<int>(c.cycle.size()) - 3;
    }
    return bound;
}

CholeskyFactor cholesky_mtsf(const ConnectionGraph& g, const Mtsf& forest, double q, std::span<const double> edge_scale)
{
    const int n = g.node_count();
    if (!edge_scale.empty() && static_cast<int>(edge_scale.size()) != g.edge_count()) {
        throw InvalidInput("edge_scale must be empty or hold one entry per edge");
    }
    auto scale_of = [&](int e) { return edge_scale.empty() ? 1.0 : edge_scale[static_cast<std::size_t>(e)]; };

    // Elimination order: peel leaves, then walk each cycle.
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
    for (int e : forest.edges) {
        adj[static_cast<std::size_t>(g.edge(e).head)].push_back(e);
        adj[static_cast<std::size_t>(g.edge(e).tail)].push_back(e);
    }
    std::vector<int> deg(static_cast<std::size_t>(n));
    std::vector<char> queued(static_cast<std::size_t>(n), 0);
    std::vector<int> order;
    order.reserve(static_cast<std::size_t>(n));
    for (int v = 0; v < n; ++v) {
        deg[static_cast<std::size_t>(v)] = static_cast<int>(adj[static_cast<std::size_t>(v)].size());
        if (deg[static_cast<std::size_t>(v)] <= 1) {
            queued[static_cast<std::size_t>(v)] = 1;
            order.push_back(v);
        }
    }
    for (std::size_t head = 0; head < order.size(); ++head) {
        const int v = order[head];
        for (int e : adj[static_cast<std::size_t>(v)]) {
            const Edge& ed = g.edge(e);
            const int w = ed.head == v ? ed.tail : ed.head;
            if (!queued[static_cast<std::size_t>(w)] && --deg[static_cast<std::size_t>(w)] <= 1) {
                queued[static_cast<std::size_t>(w)] = 1;
                order.push_back(w);
            }
        }
    }
    for (const auto& c : forest.cycles) {
        for (int v : c.cycle) {
            if (queued[static_cast<std::size_t>(v)]) {
                throw InvalidInput("cycle node " + std::to_string(v) + " was peeled as a leaf");
            }
            queued[static_cast<std::size_t>(v)] = 1;
            order.push_back(v);
        }
    }
    if (static_cast<int>(order.size()) != n) {
        throw InvalidInput("forest structure does not match its edge set");
    }

    CholeskyFactor out;
    out.q = q;
    out.perm = order;
    std::vector<int> pos(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        pos[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = i;
    }

    // Working matrix: diagonal plus strictly upper rows in permuted indices.
    std::vector<double> diag(static_cast<std::size_t>(n), q);
    std::vector<std::vector<std::pair<int, Complex>>> rows(static_cast<std::size_t>(n));
    double scale = q;
    for (int e : forest.edges) {
        const Edge& ed = g.edge(e);
        const double w = scale_of(e) * ed.weight;
        diag[static_cast<std::size_t>(ed.head)] += w;
        diag[static_cast<std::size_t>(ed.tail)] += w;
        scale = std::max(scale, w);
        const Complex off = -w * std::polar(1.0, ed.angle); // entry (head, tail)
        const int ph = pos[static_cast<std::size_t>(ed.head)];
        const int pt = pos[static_cast<std::size_t>(ed.tail)];
        if (ph < pt) {
            rows[static_cast<std::size_t>(ph)].push_back({pt, off});
        } else {
            rows[static_cast<std::size_t>(pt)].push_back({ph, std::conj(off)});
        }
    }
    std::vector<double> pdiag(static_cast<std::size_t>(n));
    for (int v = 0; v < n; ++v) {
        pdiag[static_cast<std::size_t>(pos[static_cast<std::size_t>(v)])] = diag[static_cast<std::size_t>(v)];
    }

    auto add_to = [&](int i, int j, Complex delta) { // A_ij += delta, i < j
        auto& row = rows[static_cast<std::size_t>(i)];
        for (auto& [col, val] : row) {
            if (col == j) {
                val += delta;
                return;
            }
        }
        row.push_back({j, delta});
    };

    std::vector<Eigen::Triplet<Complex>> triplets;
    triplets.reserve(static_cast<std::size_t>(2 * n));
    std::uint64_t ops = 0;
    for (int k = 0; k < n; ++k) {
        const double d = pdiag[static_cast<std::size_t>(k)];
        if (!(d > 1e-13 * std::max(1.0, scale))) {
            throw SingularSystem("pivot " + std::to_string(k) + " (node " + std::to_string(order[static_cast<std::size_t>(k)]) +
                                 ") vanished: a tree component needs q > 0");
        }
        const double rkk = std::sqrt(d);
        ++ops;
        triplets.emplace_back(k, k, rkk);
        auto& row = rows[static_cast<std::size_t>(k)];
        std::sort(row.begin(), row.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        for (auto& [j, val] : row) {
            val /= rkk;
            ++ops;
            triplets.emplace_back(k, j, val);
            ++out.offdiag_nonzeros;
        }
        for (std::size_t a = 0; a < row.size(); ++a) {
            const auto [i, ri] = row[a];
            pdiag[static_cast<std::size_t>(i)] -= std::norm(ri);
            ++ops;
            for (std::size_t b = a + 1; b < row.size(); ++b) {
                const auto [j, rj] = row[b];
                add_to(i, j, -std::conj(ri) * rj);
                ++ops;
            }
        }
        row.clear();
        row.shrink_to_fit();
    }
    out.upper.resize(n, n);
    out.upper.setFromTriplets(triplets.begin(), triplets.end());
    out.upper.makeCompressed();
    out.factor_operations = ops;
    return out;
}

Vector solve_factored(const CholeskyFactor& factor, const Vector& b, std::uint64_t* operations)
{
    const int n = factor.dimension();
    if (b.size() != n) {
        throw InvalidInput("right-hand side has length " + std::to_string(b.size()) + ", expected " + std::to_string(n));
    }
    const SparseMatrix& r = factor.upper;
    const Complex* values = r.valuePtr();
    const int* cols = r.innerIndexPtr();
    const int* outer = r.outerIndexPtr();
    std::uint64_t ops = 0;

    Vector y(n);
    for (int i = 0; i < n; ++i) {
        y(i) = b(factor.perm[static_cast<std::size_t>(i)]);
    }
    // R^* z = y, column sweep over the rows of R; the diagonal is the first entry of each row.
    for (int i = 0; i < n; ++i) {
        const Complex zi = y(i) / values[outer[i]].real();
        y(i) = zi;
        ++ops;
        for (int p = outer[i] + 1; p < outer[i + 1]; ++p) {
            y(cols[p]) -= std::conj(values[p]) * zi;
            ++ops;
        }
    }
    // R x = z.
    for (int i = n - 1; i >= 0; --i) {
        Complex acc = y(i);
        for (int p = outer[i] + 1; p < outer[i + 1]; ++p) {
            acc -= values[p] * y(cols[p]);
            ++ops;
        }
        y(i) = acc / values[outer[i]].real();
        ++ops;
    }
    Vector x(n);
    for (int i = 0; i < n; ++i) {
        x(factor.perm[static_cast<std::size_t>(i)]) = y(i);
    }
    if (operations != nullptr) {
        *operations += ops;
    }
    return x;
}

} // namespace maglap
