#pragma once
// Deterministic PRNG (xoshiro256++ seeded via splitmix64) with the samplers
// the simulator needs. std::<random> distributions are avoided on purpose:
// their algorithms are implementation-defined and seeds must reproduce
// bit-identical streams everywhere. Substreams keyed by (seed, stream id)
// let per-individual simulation run in any order without changing results.

#include <cmath>
#include <cstdint>

#include "ibdlab/common.hpp"

namespace ibdlab {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : state_) word = splitmix64(sm);
    }

    // Independent stream derived from (seed, stream). Streams with distinct
    // ids behave as unrelated generators.
    static Rng substream(std::uint64_t seed, std::uint64_t stream) {
        std::uint64_t sm = seed;
        std::uint64_t a = splitmix64(sm);
        sm = stream ^ 0xA3EC647659359ACDull;
        std::uint64_t b = splitmix64(sm);
        return Rng(a ^ (b * 0xD6E8FEB86659FD93ull));
    }

    static Rng substream(std::uint64_t seed, std::string_view stream_id) {
        return substream(seed, fnv1a64(stream_id));
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

    // Uniform in [0, 1).
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    bool coin() { return (next_u64() >> 63) != 0; }

    // Uniform integer in [0, n); n > 0. Lemire's multiply-shift rejection.
    std::uint64_t below(std::uint64_t n) {
        while (true) {
            std::uint64_t x = next_u64();
            unsigned __int128 m = static_cast<unsigned __int128>(x) * n;
            std::uint64_t lo = static_cast<std::uint64_t>(m);
            if (lo >= n || lo >= (0 - n) % n) return static_cast<std::uint64_t>(m >> 64);
        }
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    double exponential(double mean) {
        // 1 - U in (0, 1] so log never sees zero.
        return -mean * std::log(1.0 - next_double());
    }

    // Knuth's product method; fine for the small means used here (<= ~2).
    unsigned poisson(double mean) {
        const double limit = std::exp(-mean);
        unsigned k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= next_double();
        } while (p > limit);
        return k - 1;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t state_[4];
};

}  // namespace ibdlab
