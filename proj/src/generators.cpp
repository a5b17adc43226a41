#include "maglap/generators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "maglap/errors.hpp"
#include "maglap/rng.hpp"

namespace maglap {

namespace {

// Purposes for keyed draws; fixed so instances are reproducible across versions.
constexpr std::uint64_t kEdgeCoin = 1;
constexpr std::uint64_t kNoise = 2;
constexpr std::uint64_t kOutlierCoin = 3;
constexpr std::uint64_t kOutlierValue = 4;
constexpr std::uint64_t kRankingStream = 0x52414e4bULL;

std::string describe(const char* name, std::initializer_list<double> params)
{
    std::ostringstream out;
    out << name << '(';
    bool first = true;
    for (double p : params) {
        out << (first ? "" : ",") << p;
        first = false;
    }
    out << ')';
    return out.str();
}

void check_er_params(int n, double p)
{
    if (n < 2) {
        throw InvalidInput("random graphs need n >= 2");
    }
    if (!(p >= 0.0 && p <= 1.0)) {
        throw InvalidInput("edge probability must lie in [0, 1]");
    }
}

std::vector<std::pair<int, int>> er_pairs(int n, double p, std::uint64_t seed)
{
    std::vector<std::pair<int, int>> pairs;
    if (p <= 0.0) {
        return pairs;
    }
    pairs.reserve(static_cast<std::size_t>(p * n * (n - 1) / 2 * 1.1) + 16);
    for (int u = 0; u < n; ++u) {
        for (int v = u + 1; v < n; ++v) {
            if (p >= 1.0 || keyed_uniform(seed, static_cast<std::uint64_t>(u), static_cast<std::uint64_t>(v), kEdgeCoin) < p) {
                pairs.emplace_back(u, v);
            }
        }
    }
    return pairs;
}

struct Restricted {
    ConnectionGraph graph;
    std::vector<int> kept; // new id -> old id
};

Restricted largest_component(const ConnectionGraph& g)
{
    std::vector<int> sizes(static_cast<std::size_t>(g.component_count()), 0);
    for (int c : g.component_labels()) {
        ++sizes[static_cast<std::size_t>(c)];
    }
    const int best = static_cast<int>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
    std::vector<int> relabel(static_cast<std::size_t>(g.node_count()), -1);
    Restricted out;
    for (int v = 0; v < g.node_count(); ++v) {
        if (g.component_labels()[static_cast<std::size_t>(v)] == best) {
            relabel[static_cast<std::size_t>(v)] = static_cast<int>(out.kept.size());
            out.kept.push_back(v);
        }
    }
    std::vector<Edge> edges;
    for (const Edge& e : g.edges()) {
        if (relabel[static_cast<std::size_t>(e.head)] >= 0) {
            edges.push_back({relabel[static_cast<std::size_t>(e.head)], relabel[static_cast<std::size_t>(e.tail)], e.weight, e.angle});
        }
    }
    out.graph = ConnectionGraph(static_cast<int>(out.kept.size()), std::move(edges));
    return out;
}

// Shared driver for the planted models: draws topology + angles for one seed,
// then applies the connectivity policy.
template <typename AngleFn>
PlantedInstance planted(int n, double p, std::uint64_t seed, const GeneratorOptions& options, AngleFn&& angle_of)
{
    check_er_params(n, p);
    const int attempts = options.connectivity == ConnectivityPolicy::resample ? std::max(1, options.max_attempts) : 1;
    for (int a = 0; a < attempts; ++a) {
        const std::uint64_t draw_seed = a == 0 ? seed : derive_key(seed, static_cast<std::uint64_t>(a));
        PlantedInstance inst;
        inst.seed = seed;
        inst.attempts = a + 1;
        inst.ranking = planted_ranking(n, draw_seed);
        std::vector<Edge> edges;
        for (const auto& [u, v] : er_pairs(n, p, draw_seed)) {
            bool is_outlier = false;
            const double theta = angle_of(draw_seed, u, v, inst.ranking, is_outlier);
            edges.push_back({u, v, 1.0, theta});
            inst.outlier.push_back(is_outlier);
        }
        inst.graph = ConnectionGraph(n, std::move(edges));
        if (inst.graph.connected() || options.connectivity == ConnectivityPolicy::accept) {
            return inst;
        }
        if (options.connectivity == ConnectivityPolicy::largest_component) {
            auto restricted = largest_component(inst.graph);
            std::vector<int> ranking;
            for (int old : restricted.kept) {
                ranking.push_back(inst.ranking[static_cast<std::size_t>(old)]);
            }
            // Re-rank the survivors to a permutation of 1..k preserving order.
            std::vector<int> order(ranking.size());
            for (std::size_t i = 0; i < order.size(); ++i) {
                order[i] = static_cast<int>(i);
            }
            std::sort(order.begin(), order.end(), [&](int x, int y) { return ranking[static_cast<std::size_t>(x)] < ranking[static_cast<std::size_t>(y)]; });
            for (std::size_t r = 0; r < order.size(); ++r) {
                ranking[static_cast<std::size_t>(order[r])] = static_cast<int>(r) + 1;
            }
            // Edges keep their relative order inside the component.
            const auto labels = inst.graph.component_labels();
            const int keep = labels[static_cast<std::size_t>(restricted.kept.front())];
            std::vector<bool> outlier;
            for (int e = 0; e < inst.graph.edge_count(); ++e) {
                if (labels[static_cast<std::size_t>(inst.graph.edge(e).head)] == keep) {
                    outlier.push_back(inst.outlier[static_cast<std::size_t>(e)]);
                }
            }
            inst.graph = std::move(restricted.graph);
            inst.ranking = std::move(ranking);
            inst.outlier = std::move(outlier);
            return inst;
        }
    }
    throw InvalidInput("no connected draw after " + std::to_string(attempts) + " attempts (n=" + std::to_string(n) +
                       ", p=" + std::to_string(p) + ")");
}

} // namespace

std::vector<int> planted_ranking(int n, std::uint64_t seed)
{
    std::vector<int> h(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        h[static_cast<std::size_t>(i)] = i + 1;
    }
    CounterRng rng = CounterRng(seed).split(kRankingStream);
    for (std::size_t i = h.size(); i > 1; --i) {
        std::swap(h[i - 1], h[static_cast<std::size_t>(rng.below(i))]);
    }
    return h;
}

ConnectionGraph gen_er(int n, double p, std::uint64_t seed, const GeneratorOptions& options)
{
    auto inst = planted(n, p, seed, options, [](std::uint64_t, int, int, const std::vector<int>&, bool&) { return 0.0; });
    return std::move(inst.graph);
}

PlantedInstance gen_mun(int n, double p, double eta, std::uint64_t seed, const GeneratorOptions& options)
{
    if (eta < 0.0) {
        throw InvalidInput("noise level must be nonnegative");
    }
    const double scale = 1.0 / (std::numbers::pi * (n - 1));
    auto inst = planted(n, p, seed, options, [&](std::uint64_t s, int u, int v, const std::vector<int>& h, bool&) {
        const double noise = keyed_uniform(s, static_cast<std::uint64_t>(u), static_cast<std::uint64_t>(v), kNoise);
        const double diff = h[static_cast<std::size_t>(u)] - h[static_cast<std::size_t>(v)];
        return diff * (1.0 + eta * noise) * scale;
    });
    inst.model = describe("MUN", {double(n), p, eta});
    return inst;
}

namespace {

double ero_angle(std::uint64_t s, int u, int v, const std::vector<int>& h, double eta, int n, bool& is_outlier)
{
    const double scale = 1.0 / (std::numbers::pi * (n - 1));
    const auto uu = static_cast<std::uint64_t>(u);
    const auto vv = static_cast<std::uint64_t>(v);
    is_outlier = eta > 0.0 && keyed_uniform(s, uu, vv, kOutlierCoin) < eta;
    if (!is_outlier) {
        return (h[static_cast<std::size_t>(u)] - h[static_cast<std::size_t>(v)]) * scale;
    }
    // Uniform on {-n+1, ..., n-1}: 2n-1 values.
    const auto span = static_cast<double>(2 * n - 1);
    const int eps = static_cast<int>(std::floor(keyed_uniform(s, uu, vv, kOutlierValue) * span)) - (n - 1);
    return eps * scale;
}

} // namespace

PlantedInstance gen_ero(int n, double p, double eta, std::uint64_t seed, const GeneratorOptions& options)
{
    if (!(eta >= 0.0 && eta <= 1.0)) {
        throw InvalidInput("outlier probability must lie in [0, 1]");
    }
    auto inst = planted(n, p, seed, options, [&](std::uint64_t s, int u, int v, const std::vector<int>& h, bool& out) {
        return ero_angle(s, u, v, h, eta, n, out);
    });
    inst.model = describe("ERO", {double(n), p, eta});
    return inst;
}

PlantedInstance gen_barbell(int n, double eta, std::uint64_t seed)
{
    if (n < 4 || n % 2 != 0) {
        throw InvalidInput("barbell graphs need an even n >= 4");
    }
    if (!(eta >= 0.0 && eta <= 1.0)) {
        throw InvalidInput("outlier probability must lie in [0, 1]");
    }
    const int half = n / 2;
    PlantedInstance inst;
    inst.seed = seed;
    inst.ranking = planted_ranking(n, seed);
    std::vector<Edge> edges;
    edges.reserve(static_cast<std::size_t>(half) * static_cast<std::size_t>(half - 1) + 1);
    auto add = [&](int u, int v) {
        bool is_outlier = false;
        const double theta = ero_angle(seed, u, v, inst.ranking, eta, n, is_outlier);
        edges.push_back({u, v, 1.0, theta});
        inst.outlier.push_back(is_outlier);
    };
    for (int block = 0; block < 2; ++block) {
        const int base = block * half;
        for (int u = base; u < base + half; ++u) {
            for (int v = u + 1; v < base + half; ++v) {
                add(u, v);
            }
        }
    }
    add(half - 1, half);
    inst.graph = ConnectionGraph(n, std::move(edges));
    inst.model = eta > 0.0 ? describe("Barbell", {double(n), eta}) : describe("Barbell", {double(n)});
    return inst;
}

PlantedInstance attach_connection(const ConnectionGraph& topology, NoiseModel model, double eta, std::uint64_t seed)
{
    if (eta < 0.0 || (model == NoiseModel::outliers && eta > 1.0)) {
        throw InvalidInput("noise level out of range");
    }
    const int n = topology.node_count();
    const double scale = n > 1 ? 1.0 / (std::numbers::pi * (n - 1)) : 0.0;
    PlantedInstance inst;
    inst.seed = seed;
    inst.ranking = planted_ranking(n, seed);
    std::vector<Edge> edges;
    edges.reserve(static_cast<std::size_t>(topology.edge_count()));
    for (const Edge& e : topology.edges()) {
        const int u = std::min(e.head, e.tail);
        const int v = std::max(e.head, e.tail);
        const auto uu = static_cast<std::uint64_t>(u);
        const auto vv = static_cast<std::uint64_t>(v);
        const double diff = inst.ranking[static_cast<std::size_t>(u)] - inst.ranking[static_cast<std::size_t>(v)];
        double theta = 0.0;
        bool is_outlier = false;
        if (model == NoiseModel::mun) {
            theta = diff * (1.0 + eta * keyed_uniform(seed, uu, vv, kNoise)) * scale;
        } else {
            is_outlier = eta > 0.0 && keyed_uniform(seed, uu, vv, kOutlierCoin) < eta;
            theta = is_outlier ? kTwoPi * keyed_uniform(seed, uu, vv, kOutlierValue) : diff * scale;
        }
        edges.push_back({u, v, e.weight, theta});
        inst.outlier.push_back(is_outlier);
    }
    inst.graph = ConnectionGraph(n, std::move(edges));
    inst.model = model == NoiseModel::mun ? describe("Loaded-MUN", {eta}) : describe("Loaded-O", {eta});
    return inst;
}

} // namespace maglap
