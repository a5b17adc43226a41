#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "maglap/generators.hpp"
#include "maglap/graph.hpp"
#include "maglap/leverage.hpp"

namespace maglap {

/// Resolved settings of one CLI run. Serializes to `key = value` lines; doubles use
/// 17 significant digits so a save/load cycle is bit-exact.
struct ExperimentConfig {
    std::string command;
    /// Generator spec (er:n=..,p=.. | mun:n=..,p=..,eta=.. | ero:... | barbell:n=..[,eta=..])
    /// or file:<path> for an edge list.
    std::string graph;
    double q = 0.0;
    /// Sweep values (bench; precond when non-empty).
    std::vector<double> q_values;
    /// st (Wilson) | sf (trivial connection, q > 0) | crsf (q = 0) | mtsf | iid
    std::string sampler = "mtsf";
    /// exact | capped
    std::string weights = "exact";
    /// plain | self-normalized
    std::string estimator = "plain";
    LsMethod ls = LsMethod::exact;
    std::vector<int> batches{1};
    int replicates = 1;
    std::uint64_t seed = 0;
    std::string out = ".";
    int threads = 1;
    /// Target distortion; when positive, sparsify derives t from batch_size_bound.
    double epsilon = 0.0;
    double delta = 0.1;
    /// exact | sparsify-and-eigensolve | sparsify-and-precondition
    std::string eigen_mode = "exact";
    /// Comparisons (syncrank) or labels (ssl) file.
    std::string input;
    /// Preconditioner arms as <sampler>-<ls>, e.g. dpp-exact, st-uniform, iid-jl.
    std::vector<std::string> methods{"dpp-exact"};
    /// magnetic | combinatorial
    std::string laplacian = "magnetic";

    bool operator==(const ExperimentConfig&) const = default;
};

std::string to_text(const ExperimentConfig& config);
/// Unknown keys and malformed values raise InvalidInput naming the line.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
void save_config(const ExperimentConfig& config, const std::string& path);
/// Checks enumerated fields and ranges.
void validate_config(const ExperimentConfig& config);

/// %.17g.
std::string format_double(double x);

struct GraphSource {
    ConnectionGraph graph;
    /// Planted scores h when the source is a planted generator.
    std::vector<int> ranking;
    std::string description;
};

/// Builds the graph named by a spec; generator draws use `seed`.
GraphSource make_graph(const std::string& spec, std::uint64_t seed);

} // namespace maglap
