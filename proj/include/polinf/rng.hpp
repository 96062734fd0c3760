#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include <Eigen/Core>

namespace polinf {

// splitmix64 finalizer; used to derive independent, reproducible RNG streams
// from (seed, stream ids) without correlated low bits.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> ids) {
    std::uint64_t h = splitmix64(seed);
    for (std::uint64_t id : ids) h = splitmix64(h ^ id);
    return h;
}

inline std::mt19937_64 make_engine(std::uint64_t seed, std::initializer_list<std::uint64_t> ids = {}) {
    return std::mt19937_64(mix_seed(seed, ids));
}

// Fresh distribution object per call so the stream depends only on the engine
// state, never on cached Box-Muller spares.
inline Eigen::VectorXd standard_normal(std::mt19937_64& eng, Eigen::Index n) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = normal(eng);
    return v;
}

inline Eigen::VectorXd uniform01(std::mt19937_64& eng, Eigen::Index n) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = unif(eng);
    return v;
}

}  // namespace polinf
