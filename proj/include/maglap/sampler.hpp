#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "maglap/graph.hpp"
#include "maglap/rng.hpp"

namespace maglap {

/// Sentinel returned by random_successor for a step into the virtual root.
inline constexpr int kRoot = -1;

struct RootedTree {
    int root = 0;
    std::vector<int> edges;
};

struct CycleRootedTree {
    /// Cycle nodes in traversal order; the closing edge joins back() to front().
    std::vector<int> cycle;
    /// Holonomy of the cycle in traversal order, in [0, 2π).
    double angle = 0.0;
    /// The acceptance probability 1 - cos(angle) exceeded one and was capped.
    bool capped = false;
    std::vector<int> edges;
};

/// Unoriented multi-type spanning forest. Components partition the nodes;
/// `edges` is the sorted union of all component edge sets.
struct Mtsf {
    std::vector<int> edges;
    std::vector<RootedTree> trees;
    std::vector<CycleRootedTree> cycles;
    double q = 0.0;

    int size() const noexcept { return static_cast<int>(edges.size()); }
    int tree_count() const noexcept { return static_cast<int>(trees.size()); }

    /// q^{#trees} Π (2 - 2cos θ).
    double measure_weight() const;
    /// Π max(1, 1 - cos θ): ratio of the target measure to the capped one, up to normalization.
    double importance_weight() const;
};

struct WalkStats {
    std::uint64_t steps = 0;
    std::uint64_t cycles_popped = 0;
    std::uint64_t cycles_accepted = 0;
    std::uint64_t bernoulli_draws = 0;

    WalkStats& operator+=(const WalkStats& other) noexcept;
};

enum class WeightMode {
    /// Accept a cycle with probability 1 - cos θ; fails when that exceeds one.
    exact,
    /// Accept with min(1, 1 - cos θ).
    capped,
};

struct CyclePoppingOptions {
    WeightMode mode = WeightMode::exact;
    std::uint64_t step_budget = 1'000'000'000ULL;
};

/// One step of the rooted walk: kRoot with probability q/(q+d(v)), otherwise a
/// uniformly chosen neighbour. Edge weights are ignored.
int random_successor(const ConnectionGraph& g, double q, int v, CounterRng& rng);

/// Reusable cycle-popping sampler. Holds O(n) scratch space so repeated draws
/// do not allocate; one instance per thread.
class CyclePopper {
public:
    CyclePopper(const ConnectionGraph& g, double q, CyclePoppingOptions options = {});

    Mtsf sample(CounterRng& rng, WalkStats* stats = nullptr);

    const ConnectionGraph& graph() const noexcept { return *g_; }
    double q() const noexcept { return q_; }

private:
    const ConnectionGraph* g_;
    double q_;
    CyclePoppingOptions options_;
    std::vector<int> next_;
    std::vector<int> next_edge_;
    std::vector<int> component_;
    std::vector<int> path_;
    std::vector<int> path_edge_;
    std::vector<int> position_;
};

Mtsf cycle_popping(const ConnectionGraph& g, double q, CounterRng& rng, CyclePoppingOptions options = {},
                   WalkStats* stats = nullptr);

/// Uniform spanning tree by Wilson's algorithm from a uniformly drawn root.
/// Weighted graphs step proportionally to edge weights.
Mtsf wilson_st(const ConnectionGraph& g, CounterRng& rng, WalkStats* stats = nullptr);

/// `count` independent categorical draws proportional to `scores`; returns edge ids.
std::vector<int> iid_edges(std::span<const double> scores, int count, CounterRng& rng);

/// Decomposes an edge subset into trees and cycle-rooted trees.
/// Throws InvalidInput when some component has more than one cycle.
Mtsf mtsf_from_edges(const ConnectionGraph& g, std::vector<int> edges, double q);

/// Structural check of the Mtsf invariants against `g`; throws InvalidInput on violation.
void validate_mtsf(const ConnectionGraph& g, const Mtsf& forest);

} // namespace maglap
