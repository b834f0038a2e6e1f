#pragma once

#include <cstdint>
#include <string_view>

namespace fso {

/// 64-bit FNV-1a over a byte string.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ull);

/// SplitMix64 finalizer; a bijective 64-bit mixer.
std::uint64_t mix64(std::uint64_t x);

/// Counter-based random stream. The n-th draw depends only on (key, n), so a
/// stream can be re-created anywhere and consumers never perturb each other.
/// Every random consumer in the simulator derives its own stream from the
/// scenario seed through a purpose name and an index.
///
/// Distribution code is hand-written (no <random> distributions) so draws are
/// identical across standard library implementations.
class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::string_view purpose, std::uint64_t index = 0);

    /// Child stream, independent from this one and from siblings with other names.
    RandomStream substream(std::string_view purpose, std::uint64_t index = 0) const;

    std::uint64_t next_u64();
    /// Uniform in [0, 1) with 53 random bits.
    double uniform();
    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Standard normal deviate (Box-Muller, pairs cached).
    double normal();

    std::uint64_t key() const noexcept { return key_; }
    std::uint64_t counter() const noexcept { return counter_; }

private:
    explicit RandomStream(std::uint64_t key) : key_(key) {}

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace fso
