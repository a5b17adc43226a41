#include "maglap/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "maglap/errors.hpp"

namespace maglap {

namespace {

constexpr int kOutside = -2;

// Angle of e traversed away from `from`, unwrapped so a 2-cycle sums to exactly 0.
double signed_angle(const Edge& e, int from) noexcept { return from == e.head ? e.angle : -e.angle; }

std::string describe_cycle(std::span<const int> nodes)
{
    std::ostringstream out;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        out << (i ? " -> " : "") << nodes[i];
    }
    return out.str();
}

} // namespace

double Mtsf::measure_weight() const
{
    double w = std::pow(q, static_cast<double>(trees.size()));
    for (const auto& c : cycles) {
        w *= cycle_weight(c.angle);
    }
    return w;
}

double Mtsf::importance_weight() const
{
    double w = 1.0;
    for (const auto& c : cycles) {
        w *= std::max(1.0, 1.0 - std::cos(c.angle));
    }
    return w;
}

WalkStats& WalkStats::operator+=(const WalkStats& other) noexcept
{
    steps += other.steps;
    cycles_popped += other.cycles_popped;
    cycles_accepted += other.cycles_accepted;
    bernoulli_draws += other.bernoulli_draws;
    return *this;
}

int random_successor(const ConnectionGraph& g, double q, int v, CounterRng& rng)
{
    const int d = g.degree(v);
    if (d == 0 && q <= 0.0) {
        throw InvalidInput("node " + std::to_string(v) + " is isolated and q = 0: the walk cannot move");
    }
    const double x = rng.uniform() * (q + d);
    if (x < q) {
        return kRoot;
    }
    const int k = std::min(d - 1, static_cast<int>(x - q));
    return g.neighbors(v)[static_cast<std::size_t>(k)].neighbor;
}

CyclePopper::CyclePopper(const ConnectionGraph& g, double q, CyclePoppingOptions options)
    : g_(&g), q_(q), options_(options)
{
    if (!(q >= 0.0) || !std::isfinite(q)) {
        throw InvalidInput("q must be a finite nonnegative number");
    }
    if (!g.unit_weights()) {
        throw InvalidInput("cycle popping samples the unit-weight measure; the graph has non-unit weights");
    }
    const auto n = static_cast<std::size_t>(g.node_count());
    for (int v = 0; v < g.node_count(); ++v) {
        if (g.degree(v) == 0 && q == 0.0) {
            throw InvalidInput("node " + std::to_string(v) + " is isolated and q = 0");
        }
    }
    next_.resize(n);
    next_edge_.resize(n);
    component_.resize(n);
    position_.assign(n, -1);
    path_.reserve(n);
    path_edge_.reserve(n);
}

Mtsf CyclePopper::sample(CounterRng& rng, WalkStats* stats)
{
    const ConnectionGraph& g = *g_;
    const int n = g.node_count();
    std::fill(next_.begin(), next_.end(), kOutside);
    std::fill(component_.begin(), component_.end(), -1);

    Mtsf out;
    out.q = q_;
    WalkStats local;

    // Attach the current branch: path_[i] -> path_[i+1] along path_edge_[i],
    // and the last node to `tail` along `tail_edge`.
    auto commit = [&](int tail, int tail_edge) {
        for (std::size_t i = 0; i + 1 < path_.size(); ++i) {
            next_[static_cast<std::size_t>(path_[i])] = path_[i + 1];
            next_edge_[static_cast<std::size_t>(path_[i])] = path_edge_[i];
        }
        next_[static_cast<std::size_t>(path_.back())] = tail;
        next_edge_[static_cast<std::size_t>(path_.back())] = tail_edge;
        for (int v : path_) {
            position_[static_cast<std::size_t>(v)] = -1;
        }
    };

    for (int s = 0; s < n; ++s) {
        if (next_[static_cast<std::size_t>(s)] != kOutside) {
            continue;
        }
        path_.clear();
        path_edge_.clear();
        path_.push_back(s);
        position_[static_cast<std::size_t>(s)] = 0;
        int u = s;
        while (true) {
            if (++local.steps > options_.step_budget) {
                throw StepBudgetExceeded("cycle popping exceeded " + std::to_string(options_.step_budget) +
                                         " steps; q = 0 with a trivial connection never terminates");
            }
            const int d = g.degree(u);
            const double x = rng.uniform() * (q_ + d);
            if (x < q_) {
                commit(kRoot, -1);
                component_[static_cast<std::size_t>(u)] = 2 * out.tree_count();
                out.trees.push_back({u, {}});
                break;
            }
            const Incidence& inc = g.neighbors(u)[static_cast<std::size_t>(std::min(d - 1, static_cast<int>(x - q_)))];
            const int w = inc.neighbor;
            if (next_[static_cast<std::size_t>(w)] != kOutside) {
                commit(w, inc.edge);
                break;
            }
            const int start = position_[static_cast<std::size_t>(w)];
            if (start < 0) {
                path_edge_.push_back(inc.edge);
                position_[static_cast<std::size_t>(w)] = static_cast<int>(path_.size());
                path_.push_back(w);
                u = w;
                continue;
            }

            // Loop closed: path_[start..] followed by the edge back to w.
            ++local.cycles_popped;
            const auto length = path_.size() - static_cast<std::size_t>(start);
            double alpha = 0.0;
            double theta = 0.0;
            if (length > 2) {
                for (std::size_t i = static_cast<std::size_t>(start); i + 1 < path_.size(); ++i) {
                    theta += signed_angle(g.edge(path_edge_[i]), path_[i]);
                }
                theta += signed_angle(g.edge(inc.edge), u);
                alpha = 1.0 - std::cos(theta);
            }
            bool capped = false;
            if (alpha > 1.0) {
                if (options_.mode == WeightMode::exact && alpha > 1.0 + 1e-12) {
                    const std::span<const int> nodes(path_.data() + start, length);
                    throw StrongInconsistency("cycle " + describe_cycle(nodes) + " has acceptance 1 - cos θ = " +
                                              std::to_string(alpha) + " > 1; use capped mode");
                }
                capped = alpha > 1.0 + 1e-12;
                alpha = 1.0;
            }
            bool accept = false;
            if (alpha > 0.0) {
                ++local.bernoulli_draws;
                accept = rng.uniform() < alpha;
            }
            if (accept) {
                ++local.cycles_accepted;
                CycleRootedTree crt;
                crt.cycle.assign(path_.begin() + start, path_.end());
                crt.angle = wrap_angle(theta);
                crt.capped = capped;
                const int id = 2 * static_cast<int>(out.cycles.size()) + 1;
                for (int v : crt.cycle) {
                    component_[static_cast<std::size_t>(v)] = id;
                }
                out.cycles.push_back(std::move(crt));
                commit(w, inc.edge);
                break;
            }
            for (std::size_t i = static_cast<std::size_t>(start) + 1; i < path_.size(); ++i) {
                position_[static_cast<std::size_t>(path_[i])] = -1;
            }
            path_.resize(static_cast<std::size_t>(start) + 1);
            path_edge_.resize(static_cast<std::size_t>(start));
            u = w;
        }
    }

    // Every node now points towards a root or into a recorded cycle.
    for (int v = 0; v < n; ++v) {
        path_.clear();
        int x = v;
        while (component_[static_cast<std::size_t>(x)] < 0) {
            path_.push_back(x);
            x = next_[static_cast<std::size_t>(x)];
        }
        for (int y : path_) {
            component_[static_cast<std::size_t>(y)] = component_[static_cast<std::size_t>(x)];
        }
    }
    for (int v = 0; v < n; ++v) {
        if (next_[static_cast<std::size_t>(v)] == kRoot) {
            continue;
        }
        const int e = next_edge_[static_cast<std::size_t>(v)];
        const int c = component_[static_cast<std::size_t>(v)];
        if (c % 2 == 0) {
            out.trees[static_cast<std::size_t>(c / 2)].edges.push_back(e);
        } else {
            out.cycles[static_cast<std::size_t>(c / 2)].edges.push_back(e);
        }
        out.edges.push_back(e);
    }
    std::sort(out.edges.begin(), out.edges.end());
    for (auto& t : out.trees) {
        std::sort(t.edges.begin(), t.edges.end());
    }
    for (auto& c : out.cycles) {
        std::sort(c.edges.begin(), c.edges.end());
    }
    if (stats != nullptr) {
        *stats += local;
    }
    return out;
}

Mtsf cycle_popping(const ConnectionGraph& g, double q, CounterRng& rng, CyclePoppingOptions options, WalkStats* stats)
{
    CyclePopper popper(g, q, options);
    return popper.sample(rng, stats);
}

Mtsf wilson_st(const ConnectionGraph& g, CounterRng& rng, WalkStats* stats)
{
    const int n = g.node_count();
    if (n == 0 || !g.connected()) {
        throw InvalidInput("spanning trees need a nonempty connected graph");
    }
    const bool unit = g.unit_weights();
    std::vector<char> in_tree(static_cast<std::size_t>(n), 0);
    std::vector<int> next(static_cast<std::size_t>(n), -1);
    std::vector<int> next_edge(static_cast<std::size_t>(n), -1);
    const int root = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    in_tree[static_cast<std::size_t>(root)] = 1;
    std::uint64_t steps = 0;

    for (int s = 0; s < n; ++s) {
        int u = s;
        while (!in_tree[static_cast<std::size_t>(u)]) {
            const auto nb = g.neighbors(u);
            std::size_t k = 0;
            if (unit) {
                k = static_cast<std::size_t>(rng.below(nb.size()));
            } else {
                double x = rng.uniform() * g.weighted_degree(u);
                while (k + 1 < nb.size() && (x -= g.edge(nb[k].edge).weight) >= 0.0) {
                    ++k;
                }
            }
            next[static_cast<std::size_t>(u)] = nb[k].neighbor;
            next_edge[static_cast<std::size_t>(u)] = nb[k].edge;
            u = nb[k].neighbor;
            ++steps;
        }
        for (u = s; !in_tree[static_cast<std::size_t>(u)]; u = next[static_cast<std::size_t>(u)]) {
            in_tree[static_cast<std::size_t>(u)] = 1;
        }
    }

    Mtsf out;
    RootedTree tree{root, {}};
    for (int v = 0; v < n; ++v) {
        if (v != root) {
            tree.edges.push_back(next_edge[static_cast<std::size_t>(v)]);
        }
    }
    std::sort(tree.edges.begin(), tree.edges.end());
    out.edges = tree.edges;
    out.trees.push_back(std::move(tree));
    if (stats != nullptr) {
        stats->steps += steps;
    }
    return out;
}

std::vector<int> iid_edges(std::span<const double> scores, int count, CounterRng& rng)
{
    if (count < 0) {
        throw InvalidInput("draw count must be nonnegative");
    }
    double total = 0.0;
    for (double s : scores) {
        if (!(s >= 0.0) || !std::isfinite(s)) {
            throw InvalidInput("scores must be finite and nonnegative");
        }
        total += s;
    }
    if (!(total > 0.0)) {
        throw InvalidInput("scores sum to zero");
    }
    std::discrete_distribution<int> pick(scores.begin(), scores.end());
    std::vector<int> draws(static_cast<std::size_t>(count));
    for (auto& d : draws) {
        d = pick(rng);
    }
    return draws;
}

Mtsf mtsf_from_edges(const ConnectionGraph& g, std::vector<int> edges, double q)
{
    const int n = g.node_count();
    std::sort(edges.begin(), edges.end());
    if (std::adjacent_find(edges.begin(), edges.end()) != edges.end()) {
        throw InvalidInput("edge subset lists an edge twice");
    }
    for (int e : edges) {
        if (e < 0 || e >= g.edge_count()) {
            throw InvalidInput("edge id " + std::to_string(e) + " out of range");
        }
    }

    std::vector<std::vector<std::pair<int, int>>> adj(static_cast<std::size_t>(n));
    std::vector<int> parent(static_cast<std::size_t>(n));
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[static_cast<std::size_t>(x)] != x) {
            x = parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
        }
        return x;
    };
    for (int e : edges) {
        const Edge& ed = g.edge(e);
        adj[static_cast<std::size_t>(ed.head)].push_back({ed.tail, e});
        adj[static_cast<std::size_t>(ed.tail)].push_back({ed.head, e});
        parent[static_cast<std::size_t>(find(ed.head))] = find(ed.tail);
    }

    std::vector<int> nodes_in(static_cast<std::size_t>(n), 0);
    std::vector<int> edges_in(static_cast<std::size_t>(n), 0);
    std::vector<int> min_node(static_cast<std::size_t>(n), n);
    for (int v = 0; v < n; ++v) {
        const int r = find(v);
        ++nodes_in[static_cast<std::size_t>(r)];
        min_node[static_cast<std::size_t>(r)] = std::min(min_node[static_cast<std::size_t>(r)], v);
    }
    for (int e : edges) {
        ++edges_in[static_cast<std::size_t>(find(g.edge(e).head))];
    }
    for (int v = 0; v < n; ++v) {
        if (find(v) == v && edges_in[static_cast<std::size_t>(v)] > nodes_in[static_cast<std::size_t>(v)]) {
            throw InvalidInput("component containing node " + std::to_string(min_node[static_cast<std::size_t>(v)]) +
                               " has more than one cycle");
        }
    }

    // Peel leaves; whatever keeps degree >= 2 lies on a cycle.
    std::vector<int> deg(static_cast<std::size_t>(n));
    std::vector<int> queue;
    for (int v = 0; v < n; ++v) {
        deg[static_cast<std::size_t>(v)] = static_cast<int>(adj[static_cast<std::size_t>(v)].size());
        if (deg[static_cast<std::size_t>(v)] <= 1) {
            queue.push_back(v);
        }
    }
    std::vector<char> peeled(static_cast<std::size_t>(n), 0);
    while (!queue.empty()) {
        const int v = queue.back();
        queue.pop_back();
        peeled[static_cast<std::size_t>(v)] = 1;
        for (auto [w, e] : adj[static_cast<std::size_t>(v)]) {
            if (!peeled[static_cast<std::size_t>(w)] && --deg[static_cast<std::size_t>(w)] == 1) {
                queue.push_back(w);
            }
        }
    }

    Mtsf out;
    out.q = q;
    out.edges = edges;
    std::vector<int> slot(static_cast<std::size_t>(n), -1); // root -> index in trees (even) / cycles (odd)
    for (int v = 0; v < n; ++v) {
        const int r = find(v);
        if (v != min_node[static_cast<std::size_t>(r)]) {
            continue;
        }
        if (edges_in[static_cast<std::size_t>(r)] + 1 == nodes_in[static_cast<std::size_t>(r)]) {
            slot[static_cast<std::size_t>(r)] = 2 * out.tree_count();
            out.trees.push_back({v, {}});
            continue;
        }
        // Walk the cycle from its smallest node.
        int start = -1;
        for (int x = v; x < n && start < 0; ++x) {
            if (find(x) == r && !peeled[static_cast<std::size_t>(x)]) {
                start = x;
            }
        }
        CycleRootedTree crt;
        double theta = 0.0;
        int prev_edge = -1;
        int x = start;
        do {
            crt.cycle.push_back(x);
            for (auto [w, e] : adj[static_cast<std::size_t>(x)]) {
                if (!peeled[static_cast<std::size_t>(w)] && e != prev_edge) {
                    theta += signed_angle(g.edge(e), x);
                    prev_edge = e;
                    x = w;
                    break;
                }
            }
        } while (x != start);
        crt.angle = wrap_angle(theta);
        slot[static_cast<std::size_t>(r)] = 2 * static_cast<int>(out.cycles.size()) + 1;
        out.cycles.push_back(std::move(crt));
    }
    for (int e : edges) {
        const int s = slot[static_cast<std::size_t>(find(g.edge(e).head))];
        if (s % 2 == 0) {
            out.trees[static_cast<std::size_t>(s / 2)].edges.push_back(e);
        } else {
            out.cycles[static_cast<std::size_t>(s / 2)].edges.push_back(e);
        }
    }
    return out;
}

void validate_mtsf(const ConnectionGraph& g, const Mtsf& forest)
{
    const int n = g.node_count();
    auto fail = [](const std::string& what) { throw InvalidInput("invalid MTSF: " + what); };
    if (!std::is_sorted(forest.edges.begin(), forest.edges.end()) ||
        std::adjacent_find(forest.edges.begin(), forest.edges.end()) != forest.edges.end()) {
        fail("edge list not sorted and unique");
    }
    if (forest.size() != n - forest.tree_count()) {
        fail("|edges| = " + std::to_string(forest.size()) + " but n - #trees = " + std::to_string(n - forest.tree_count()));
    }

    std::vector<int> owner(static_cast<std::size_t>(n), -1);
    std::vector<int> all;
    auto claim = [&](int v, int c) {
        auto& o = owner[static_cast<std::size_t>(v)];
        if (o >= 0 && o != c) {
            fail("node " + std::to_string(v) + " lies in two components");
        }
        o = c;
    };
    auto claim_edges = [&](const std::vector<int>& es, int c) {
        for (int e : es) {
            claim(g.edge(e).head, c);
            claim(g.edge(e).tail, c);
            all.push_back(e);
        }
    };
    int c = 0;
    std::vector<int> count(static_cast<std::size_t>(forest.tree_count() + static_cast<int>(forest.cycles.size())), 0);
    for (const auto& t : forest.trees) {
        claim(t.root, c);
        claim_edges(t.edges, c);
        ++c;
    }
    for (const auto& crt : forest.cycles) {
        if (crt.cycle.size() < 3) {
            fail("cycle shorter than three nodes");
        }
        for (int v : crt.cycle) {
            claim(v, c);
        }
        claim_edges(crt.edges, c);
        const Holonomy h = holonomy(g, crt.cycle);
        if (std::abs(std::cos(h.angle) - std::cos(crt.angle)) > 1e-9) {
            fail("recorded cycle angle disagrees with its holonomy");
        }
        ++c;
    }
    for (int v = 0; v < n; ++v) {
        if (owner[static_cast<std::size_t>(v)] < 0) {
            fail("node " + std::to_string(v) + " is not covered");
        }
        ++count[static_cast<std::size_t>(owner[static_cast<std::size_t>(v)])];
    }
    c = 0;
    for (const auto& t : forest.trees) {
        if (static_cast<int>(t.edges.size()) + 1 != count[static_cast<std::size_t>(c++)]) {
            fail("tree rooted at " + std::to_string(t.root) + " is not a tree");
        }
    }
    for (const auto& crt : forest.cycles) {
        if (static_cast<int>(crt.edges.size()) != count[static_cast<std::size_t>(c++)]) {
            fail("cycle-rooted component is not unicyclic");
        }
    }
    std::sort(all.begin(), all.end());
    if (all != forest.edges) {
        fail("component edges do not match the edge list");
    }
    const Mtsf again = mtsf_from_edges(g, forest.edges, forest.q);
    if (again.tree_count() != forest.tree_count() || again.cycles.size() != forest.cycles.size()) {
        fail("component structure inconsistent with the edge set");
    }
}

} // namespace maglap
