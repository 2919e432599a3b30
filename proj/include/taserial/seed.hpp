#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <string_view>

#include "taserial/value.hpp"

namespace taserial {

/// Mixes a master seed with a label and two integers into an independent
/// child seed. Adding an agent or a step never perturbs other derivations.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view label, std::uint64_t a = 0,
                                 std::uint64_t b = 0) {
    Fnv1a h;
    h.add_u64(master);
    h.add(label);
    h.add_u64(a);
    h.add_u64(b);
    // splitmix64 finalizer
    std::uint64_t z = h.digest() + 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Deterministic source of nondeterministic choices. Bounded picks use
/// rejection sampling on the raw engine output, so the sequence is the same
/// on every platform.
class SeedStream {
public:
    explicit SeedStream(std::uint64_t seed = 0) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform index in [0, n); n must be positive.
    std::size_t pick(std::size_t n) {
        const auto bound = static_cast<std::uint64_t>(n);
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                    std::numeric_limits<std::uint64_t>::max() % bound;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return static_cast<std::size_t>(x % bound);
    }

private:
    std::mt19937_64 engine_;
};

} // namespace taserial
