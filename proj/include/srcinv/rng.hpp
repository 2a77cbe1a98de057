#pragma once

#include <cstdint>
#include <cmath>

namespace srcinv {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// xoshiro256++ stream with cached polar-method normal draws.
///
/// Streams are cheap to construct and are derived deterministically from a
/// master seed plus stream identifiers, so every particle / training pair can
/// own an independent stream and results do not depend on evaluation order.
class RandomStream {
public:
    RandomStream() : RandomStream(0xdeadbeefULL) {}

    explicit RandomStream(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : state_) word = splitmix64(sm);
    }

    /// Stream keyed by (master seed, stream id, substream id).
    static RandomStream derive(std::uint64_t master, std::uint64_t id_a,
                               std::uint64_t id_b = 0) {
        std::uint64_t sm = master;
        std::uint64_t mixed = splitmix64(sm);
        sm = mixed ^ (0x9e3779b97f4a7c15ULL * (id_a + 1));
        mixed = splitmix64(sm);
        sm = mixed ^ (0xc2b2ae3d27d4eb4fULL * (id_b + 1));
        return RandomStream(splitmix64(sm));
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal draw, Marsaglia polar method.
    double normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        cached_ = v * f;
        has_cached_ = true;
        return u * f;
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t state_[4]{};
    double cached_ = 0.0;
    bool has_cached_ = false;
};

} // namespace srcinv
