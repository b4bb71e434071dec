#pragma once
// Counter-based random streams.
//
// Every draw is addressed by a (stream key, counter) pair, and child streams
// are derived by hashing the parent key with a child index. A draw therefore
// depends only on the chain of indices leading to it -- never on evaluation
// order or thread count -- which is what makes replications, grid points and
// per-(location, stage) observations exactly reproducible.

#include <cmath>
#include <cstdint>

namespace smartseq {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

// splitmix64 finalizer (Steele, Lea & Flood).
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

class RandomStream {
public:
    RandomStream() = default;
    explicit constexpr RandomStream(std::uint64_t seed) : key_(splitmix64(seed ^ kSeedTag)) {}

    constexpr RandomStream child(std::uint64_t index) const {
        RandomStream s;
        s.key_ = splitmix64(key_ ^ splitmix64(index ^ kChildTag));
        return s;
    }

    constexpr std::uint64_t bits(std::uint64_t counter = 0) const {
        return splitmix64(key_ ^ splitmix64(counter ^ kDrawTag));
    }

    // U(0,1), strictly inside the open interval so log() is always safe.
    double uniform(std::uint64_t counter = 0) const {
        return (static_cast<double>(bits(counter) >> 11) + 0.5) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; consumes two uniforms from a counter
    // space disjoint from uniform()'s.
    double normal(std::uint64_t counter = 0) const {
        const std::uint64_t b1 = splitmix64(key_ ^ splitmix64((2 * counter) ^ kNormTag));
        const std::uint64_t b2 = splitmix64(key_ ^ splitmix64((2 * counter + 1) ^ kNormTag));
        const double u1 = (static_cast<double>(b1 >> 11) + 0.5) * 0x1.0p-53;
        const double u2 = (static_cast<double>(b2 >> 11) + 0.5) * 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    }

    bool bernoulli(double prob, std::uint64_t counter = 0) const {
        return uniform(counter) < prob;
    }

    constexpr std::uint64_t key() const { return key_; }

private:
    static constexpr std::uint64_t kSeedTag = 0x5eed5eed5eed5eedULL;
    static constexpr std::uint64_t kChildTag = 0xc41d0c41d0c41d0cULL;
    static constexpr std::uint64_t kDrawTag = 0xd4a3d4a3d4a3d4a3ULL;
    static constexpr std::uint64_t kNormTag = 0x6a0557a06a0557a0ULL;

    std::uint64_t key_ = 0;
};

}  // namespace smartseq
