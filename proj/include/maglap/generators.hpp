#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "maglap/graph.hpp"

namespace maglap {

enum class ConnectivityPolicy {
    /// Redraw with a derived seed, at most `max_attempts` times.
    resample,
    /// Keep the largest connected component, relabelled 0..k-1 in id order.
    largest_component,
    /// Return whatever was drawn; check ConnectionGraph::connected().
    accept,
};

struct GeneratorOptions {
    ConnectivityPolicy connectivity = ConnectivityPolicy::resample;
    int max_attempts = 100;
};

struct PlantedInstance {
    ConnectionGraph graph;
    /// h(u), a permutation of 1..n; larger is better.
    std::vector<int> ranking;
    /// Per-edge flag: angle replaced by pure noise (ERO-style models).
    std::vector<bool> outlier;
    std::string model;
    std::uint64_t seed = 0;
    /// Draws consumed by the resample policy (1 when the first draw was kept).
    int attempts = 1;
};

/// ER(n, p) with all angles zero. Edge {u,v} is present iff a uniform keyed by
/// (seed, u, v) falls below p, so presence does not depend on iteration order.
ConnectionGraph gen_er(int n, double p, std::uint64_t seed, const GeneratorOptions& options = {});

/// Multiplicative uniform noise: ϑ(uv) = (h_u - h_v)(1 + η ε_uv) / (π(n-1)), ε_uv ~ U[0,1].
PlantedInstance gen_mun(int n, double p, double eta, std::uint64_t seed, const GeneratorOptions& options = {});

/// Erdős-Rényi outliers: with probability 1-η, ϑ(uv) = (h_u - h_v)/(π(n-1)); otherwise
/// ϑ(uv) = ε_uv/(π(n-1)) with ε_uv uniform on {-n+1, ..., n-1}.
PlantedInstance gen_ero(int n, double p, double eta, std::uint64_t seed, const GeneratorOptions& options = {});

/// Two cliques of n/2 nodes joined by the single edge {n/2 - 1, n/2}; ERO-style noise when η > 0.
PlantedInstance gen_barbell(int n, double eta, std::uint64_t seed);

enum class NoiseModel { mun, outliers };

/// Puts a random planted connection on an existing topology (weights kept, angles replaced).
/// `mun` follows gen_mun; `outliers` keeps the planted angle with probability 1-η and
/// otherwise draws a uniform phase in [0, 2π).
PlantedInstance attach_connection(const ConnectionGraph& topology, NoiseModel model, double eta, std::uint64_t seed);

/// Random permutation of 1..n drawn from `seed`.
std::vector<int> planted_ranking(int n, std::uint64_t seed);

} // namespace maglap
