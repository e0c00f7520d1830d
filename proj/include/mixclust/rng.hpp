#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

#include "mixclust/common.hpp"

namespace mixclust {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Collapses a list of words into one stream key. Every randomized routine
/// derives its stream as mix_seed({seed, purpose..., index...}), so streams
/// are independent of scheduling and of each other.
inline std::uint64_t mix_seed(std::initializer_list<std::uint64_t> words) {
    std::uint64_t h = 0x6a09e667f3bcc909ULL;
    for (std::uint64_t w : words) {
        h ^= w;
        splitmix64(h);
        h = splitmix64(h);
    }
    return h;
}

/// xoshiro256++ with explicit distribution code. Standard-library
/// distributions are implementation-defined, so every draw here is pinned
/// arithmetic; equal seeds give equal streams on any toolchain.
class Rng {
  public:
    static Rng from_seed(std::uint64_t seed) {
        Rng r;
        std::uint64_t sm = seed;
        for (auto& word : r.state_) word = splitmix64(sm);
        return r;
    }

    /// Independent child stream; stable under reordering of split calls with
    /// distinct keys.
    Rng split(std::uint64_t key) const {
        return from_seed(mix_seed({state_[0], state_[2], key}));
    }

    std::uint64_t next() {
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

    /// Uniform on [0, 1), 53-bit resolution.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n). Multiply-shift bound; n must be > 0.
    std::uint64_t uniform_below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next()) * n) >> 64);
    }

    /// Standard normal via Box-Muller; consumes exactly two uniforms.
    double normal() {
        double u1 = 1.0 - uniform01();
        double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    double exponential() { return -std::log(1.0 - uniform01()); }

    /// Symmetric Dirichlet(1) row: normalized exponentials.
    void dirichlet1(std::span<double> out) {
        double total = 0.0;
        for (double& x : out) {
            x = exponential();
            total += x;
        }
        for (double& x : out) x /= total;
    }

    /// Index draw from a probability vector (assumed to sum to ~1).
    int categorical(std::span<const double> probs) {
        double u = uniform01();
        double acc = 0.0;
        for (int i = 0; i < static_cast<int>(probs.size()); ++i) {
            acc += probs[i];
            if (u < acc) return i;
        }
        return static_cast<int>(probs.size()) - 1;
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t state_[4] = {1, 2, 3, 4};
};

}  // namespace mixclust
