#ifndef HMCNN_RNG_HPP
#define HMCNN_RNG_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <utility>

namespace hmcnn {

/// SplitMix64 finaliser. Used for seeding and for deriving stream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seed of an independent stream: seed XOR stream index, hashed.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept
{
    return splitmix64(seed ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
}

/// xorshift64* generator (Vigna 2014): state ^= state >> 12, ^= << 25, ^= >> 27,
/// output state * 0x2545F4914F6CDD1D. The state is initialised from the seed
/// through splitmix64 so that seed 0 is valid. Identical seeds give identical
/// streams on every platform; nothing here touches the standard library
/// distributions, whose output is implementation-defined.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed = 0) noexcept : seed_{seed}, state_{splitmix64(seed)}
    {
        if (state_ == 0) state_ = 0x9E3779B97F4A7C15ULL;
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept
    {
        state_ ^= state_ >> 12;
        state_ ^= state_ << 25;
        state_ ^= state_ >> 27;
        return state_ * 0x2545F4914F6CDD1DULL;
    }

    std::uint64_t seed() const noexcept { return seed_; }

    /// Uniform on [0,1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    /// Uniform on [lo,hi).
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    /// Uniform integer on {0,…,n−1}, unbiased (Lemire's rejection method).
    std::uint64_t below(std::uint64_t n) noexcept
    {
        if (n == 0) return 0;
        const std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            const std::uint64_t r = (*this)();
            if (r >= threshold) return r % n;
        }
    }

    /// Standard normal via Box–Muller (one value per call, no caching).
    double normal() noexcept
    {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    /// Independent generator for a sub-task.
    Rng split(std::uint64_t stream) const noexcept { return Rng{derive_seed(seed_, stream)}; }

private:
    std::uint64_t seed_;
    std::uint64_t state_;
};

/// Fisher–Yates shuffle driven by Rng (std::shuffle's algorithm is unspecified).
template <class T>
void shuffle(std::span<T> items, Rng& rng) noexcept
{
    for (std::size_t i = items.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.below(i));
        std::swap(items[i - 1], items[j]);
    }
}

} // namespace hmcnn

#endif
