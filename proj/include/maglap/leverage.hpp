#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "maglap/graph.hpp"

namespace maglap {

enum class LsMethod { exact, uniform, jl };

std::string to_string(LsMethod method);
LsMethod parse_ls_method(const std::string& name);

struct LeverageScores {
    std::vector<double> values;
    LsMethod method = LsMethod::exact;
    double q = 0.0;
    /// Columns of the Rademacher sketch (jl only).
    int sketch_width = 0;
    /// JL scores moved into [1e-12, 1].
    int clipped_low = 0;
    int clipped_high = 0;

    int edge_count() const noexcept { return static_cast<int>(values.size()); }

    /// Score of edge e inside a sample holding `sample_size` edges. Uniform
    /// scores are |F|/m, so they depend on the sample; the others do not.
    double value(int e, int sample_size) const
    {
        if (method == LsMethod::uniform) {
            return static_cast<double>(sample_size) / static_cast<double>(values.size());
        }
        return values[static_cast<std::size_t>(e)];
    }

    double sum() const;
};

/// l(e) = w_e b_e (Δ + qI)⁻¹ b_e^* from a dense factorization.
/// Guarded to n ≤ kExactLeverageMaxNodes; throws SingularSystem when Δ + qI is singular.
inline constexpr int kExactLeverageMaxNodes = 3000;
LeverageScores exact_ls(const ConnectionGraph& g, double q);

/// Constant sample_size / m.
LeverageScores uniform_ls(int sample_size, int m);

/// k = ⌈40 ln(m + n) + 1⌉ for q > 0, ⌈40 ln m + 1⌉ for q = 0.
int jl_sketch_width(int m, int n, double q);

/// Squared row norms of W^{1/2} B T with (Δ + qI) T = [√q I, B* W^{1/2}] Q and Q a
/// Rademacher (m+n) × k matrix scaled by 1/√k (the √q block is dropped at q = 0).
/// Solves use a sparse Cholesky factor; results are clipped to [1e-12, 1].
LeverageScores jl_ls(const ConnectionGraph& g, double q, std::uint64_t seed, std::optional<int> width = std::nullopt);

} // namespace maglap
