#include "fso/rng.hpp"

#include <cmath>
#include <numbers>

namespace fso {

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis) {
    std::uint64_t h = basis;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ull;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebull;
    x ^= x >> 31;
    return x;
}

RandomStream::RandomStream(std::uint64_t seed, std::string_view purpose, std::uint64_t index)
    : key_(mix64(mix64(seed + 0x9e3779b97f4a7c15ull) ^ fnv1a64(purpose) ^ mix64(~index))) {}

RandomStream RandomStream::substream(std::string_view purpose, std::uint64_t index) const {
    return RandomStream(mix64(key_ ^ fnv1a64(purpose) ^ mix64(index + 0x632be59bd9b4e019ull)));
}

std::uint64_t RandomStream::next_u64() {
    // SplitMix64 evaluated at an explicit counter.
    const std::uint64_t z = key_ + (++counter_) * 0x9e3779b97f4a7c15ull;
    return mix64(z);
}

double RandomStream::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RandomStream::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
}

}  // namespace fso
