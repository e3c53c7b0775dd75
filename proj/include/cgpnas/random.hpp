#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>

namespace cgpnas {

/// Seeded random stream. All draws are derived from raw 64-bit engine
/// output with portable arithmetic, so sequences are identical across
/// standard libraries (std::*_distribution is not).
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed = 0) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform integer in [0, n). n must be positive.
    std::size_t uniform_below(std::size_t n);

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01();

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    bool bernoulli(double p) { return uniform01() < p; }

    template <typename T>
    const T& pick(std::span<const T> items) {
        return items[uniform_below(items.size())];
    }

    /// Engine state as text; restoring it continues the exact sequence.
    std::string state() const;
    static RandomStream from_state(const std::string& text);

    friend bool operator==(const RandomStream& a, const RandomStream& b) {
        return a.engine_ == b.engine_;
    }

private:
    std::mt19937_64 engine_;
};

/// splitmix64 finalizer; used to derive independent sub-seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

} // namespace cgpnas
