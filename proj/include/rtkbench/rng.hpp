// rng.hpp : counter-based deterministic random streams
//
// All randomness in the workbench is derived by hashing a key tuple
// (seed, stream tag, ids, epoch index). Draws are therefore reproducible
// and independent of evaluation order.
#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace rtkbench {

constexpr std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (char c : s) {
        h ^= static_cast<std::uint8_t>(c);
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::uint64_t mix64(std::uint64_t x) {
    // splitmix64 finalizer
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Accumulates key components into a single 64-bit state.
class RngKey {
public:
    explicit RngKey(std::uint64_t seed) : state_(mix64(seed ^ 0xA0761D6478BD642FULL)) {}

    RngKey& with(std::uint64_t v) {
        state_ = mix64(state_ ^ v);
        return *this;
    }
    RngKey& with(std::string_view tag) { return with(fnv1a(tag)); }
    RngKey& with(std::int64_t v) { return with(static_cast<std::uint64_t>(v)); }
    RngKey& with(int v) { return with(static_cast<std::uint64_t>(static_cast<std::int64_t>(v))); }

    std::uint64_t value() const { return state_; }

    // n-th 64-bit word of the stream identified by this key
    std::uint64_t word(std::uint64_t n = 0) const { return mix64(state_ + 0x8BB84B93962EACC9ULL * (n + 1)); }

    double uniform01(std::uint64_t n = 0) const {
        return static_cast<double>(word(n) >> 11) * 0x1.0p-53;
    }

    // uniform in [lo, hi)
    double uniform(double lo, double hi, std::uint64_t n = 0) const {
        return lo + (hi - lo) * uniform01(n);
    }

    double gaussian(std::uint64_t n = 0) const {
        // Box-Muller on two stream words; u clamped away from 0
        const double u = std::max(uniform01(2 * n), 0x1.0p-60);
        const double v = uniform01(2 * n + 1);
        return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * 3.14159265358979323846 * v);
    }

    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi, std::uint64_t n = 0) const {
        // inclusive bounds; span far below 2^63 everywhere it is used
        const auto span = static_cast<std::uint64_t>(hi - lo + 1);
        return lo + static_cast<std::int64_t>(word(n) % span);
    }

private:
    std::uint64_t state_;
};

} // namespace rtkbench
