#pragma once

#include <cstdint>
#include <limits>

namespace uagg {

/// SplitMix64 finalizer (Steele, Lea & Flood 2014).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Counter-based, splittable 64-bit generator.
///
/// Draw i (0-based) of a generator with key k is mix64(k + (i + 1) * 0x9E3779B97F4A7C15),
/// i.e. the SplitMix64 sequence started at state k. The key of stream s derived from a parent
/// key p is mix64(p ^ mix64(s + 0x632BE59BD9B4E019)); the root key is the stream-0 child of the
/// user seed. Every sample, restart and bootstrap iteration gets its own stream, so results do not
/// depend on evaluation order.
class CounterRng {
public:
    using result_type = std::uint64_t;

    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0) noexcept
        : key_(derive(seed, stream)) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        ++counter_;
        return mix64(key_ + counter_ * 0x9E3779B97F4A7C15ULL);
    }

    /// Independent child stream; does not advance this generator.
    CounterRng split(std::uint64_t stream) const noexcept { return CounterRng(Key{derive(key_, stream)}); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n), n > 0, by rejection.
    std::uint64_t below(std::uint64_t n) noexcept {
        const std::uint64_t limit = max() - max() % n;
        std::uint64_t x = 0;
        do {
            x = (*this)();
        } while (x >= limit);
        return x % n;
    }

    /// Standard normal via Box-Muller; consumes two draws.
    double normal() noexcept;

    std::uint64_t counter() const noexcept { return counter_; }

private:
    struct Key {
        std::uint64_t value;
    };
    explicit CounterRng(Key key) noexcept : key_(key.value) {}

    static constexpr std::uint64_t derive(std::uint64_t parent, std::uint64_t stream) noexcept {
        return mix64(parent ^ mix64(stream + 0x632BE59BD9B4E019ULL));
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace uagg
