#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace mdk {

/// Deterministic 64-bit generator (splitmix64). Streams derived from a root
/// seed plus a label hash are independent, so per-sequence work can run in
/// parallel and still reproduce the serial output bit for bit.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1).
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [0, n). n must be > 0.
    std::uint64_t next_below(std::uint64_t n) {
        // rejection sampling keeps the distribution exact
        const std::uint64_t limit = n * ((~std::uint64_t{0}) / n);
        std::uint64_t v;
        do {
            v = next_u64();
        } while (v >= limit);
        return v % n;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    /// Standard normal via Box-Muller (no cached spare; deterministic).
    double normal() {
        double u1 = next_double();
        while (u1 <= 0.0) u1 = next_double();
        const double u2 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }

    bool bernoulli(double p) { return next_double() < p; }

private:
    std::uint64_t state_;
};

inline std::uint64_t hash_label(const std::string& label) {
    // FNV-1a
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : label) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Independent substream for (seed, label, index).
inline Rng derive_rng(std::uint64_t seed, const std::string& label, std::uint64_t index = 0) {
    Rng mixer(seed ^ (hash_label(label) * 0x9e3779b97f4a7c15ULL) ^ (index * 0xd1342543de82ef95ULL));
    std::uint64_t s = mixer.next_u64();
    return Rng(s);
}

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.next_below(i));
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace mdk
