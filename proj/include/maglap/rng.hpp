#pragma once

#include <cstdint>
#include <limits>

namespace maglap {

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept
{
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Derives an independent key from a parent key and a stream index.
constexpr std::uint64_t derive_key(std::uint64_t key, std::uint64_t stream) noexcept
{
    return mix64(key ^ mix64(stream + 0x9e3779b97f4a7c15ULL) ^ 0x632be59bd9b4e019ULL);
}

/// Counter-based generator: output i is mix64(key + (i+1) * golden).
///
/// Streams are split by hashing (key, index), so replicate r of a run seeded
/// with s always sees the same numbers regardless of scheduling. Satisfies
/// UniformRandomBitGenerator.
class CounterRng {
public:
    using result_type = std::uint64_t;

    explicit CounterRng(std::uint64_t seed = 0) noexcept : key_(mix64(seed)) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept
    {
        counter_ += 0x9e3779b97f4a7c15ULL;
        return mix64(key_ + counter_);
    }

    /// Uniform double in [0, 1).
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, bound). Lemire's multiply-shift with rejection.
    std::uint64_t below(std::uint64_t bound) noexcept
    {
        auto m = static_cast<unsigned __int128>((*this)()) * bound;
        auto low = static_cast<std::uint64_t>(m);
        if (low < bound) {
            const std::uint64_t threshold = (0 - bound) % bound;
            while (low < threshold) {
                m = static_cast<unsigned __int128>((*this)()) * bound;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    bool bernoulli(double p) noexcept { return uniform() < p; }

    /// Child generator for stream `index`; does not advance this generator.
    CounterRng split(std::uint64_t index) const noexcept
    {
        CounterRng child;
        child.key_ = derive_key(key_, index);
        return child;
    }

    std::uint64_t key() const noexcept { return key_; }

private:
    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
};

/// Stateless uniform draw in [0,1) keyed by a tuple of integers.
inline double keyed_uniform(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t purpose) noexcept
{
    const std::uint64_t k = derive_key(derive_key(derive_key(mix64(seed), purpose), a), b);
    return static_cast<double>(mix64(k) >> 11) * 0x1.0p-53;
}

} // namespace maglap
