#pragma once

#include <cmath>
#include <cstdint>

#include "orthofield/lattice.hpp"

namespace orthofield {

// Counter-based generation: every innovation is a pure function of (seed, site).
// The exact mixing scheme below is pinned; changing any constant changes every
// regression number downstream.

inline uint64_t mix64(uint64_t x) {
    // splitmix64 finalizer
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

inline constexpr uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// stream key for a lattice site
inline uint64_t site_key(uint64_t seed, const MultiIndex& i) {
    uint64_t h = mix64(seed ^ kGolden);
    for (int q = 0; q < i.d; ++q) h = mix64(h ^ (kGolden * uint64_t(q + 1)) ^ uint64_t(int64_t(i[q])));
    return h;
}

// per-replication seed derivation
inline uint64_t derive_seed(uint64_t seed, uint64_t rep) {
    return mix64(seed + kGolden * (rep + 1));
}

// uniform in the open interval (0,1)
inline double to_unit(uint64_t x) {
    return double(x >> 11) * 0x1.0p-53 + 0x1.0p-54;
}

// two independent uniforms from one site key
inline void site_uniforms(uint64_t key, double& u1, double& u2) {
    u1 = to_unit(mix64(key ^ 0xd1b54a32d192ed03ULL));
    u2 = to_unit(mix64(key ^ 0x8bb84b93962eacc9ULL));
}

// standard normal via Box-Muller (pinned transform)
inline double site_normal(uint64_t seed, const MultiIndex& i) {
    double u1, u2;
    site_uniforms(site_key(seed, i), u1, u2);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

inline double site_rademacher(uint64_t seed, const MultiIndex& i) {
    double u1, u2;
    site_uniforms(site_key(seed, i), u1, u2);
    (void)u2;
    return u1 < 0.5 ? -1.0 : 1.0;
}

// centered uniform with unit variance: uniform on [-sqrt(3), sqrt(3)]
inline double site_centered_uniform(uint64_t seed, const MultiIndex& i) {
    double u1, u2;
    site_uniforms(site_key(seed, i), u1, u2);
    (void)u2;
    return (2.0 * u1 - 1.0) * 1.7320508075688772935274463415059;
}

// Pairwise (tree) summation: a deterministic reduction whose result does not
// depend on how work would be scheduled across threads.
inline double pairwise_sum(const double* x, size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (size_t i = 0; i < n; ++i) s += x[i];
        return s;
    }
    size_t h = n / 2;
    return pairwise_sum(x, h) + pairwise_sum(x + h, n - h);
}

}  // namespace orthofield
