#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include <Eigen/Core>

namespace crowd {

/// All sampling goes through this engine. The variate helpers below are
/// written out by hand so that streams are identical across standard
/// library implementations.
using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to derive independent child seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream) noexcept {
    return mix_seed(mix_seed(parent) ^ mix_seed(stream + 0x632be59bd9b4e019ULL));
}

/// Named streams; keep values stable, they feed derive_seed.
enum class Stream : std::uint64_t {
    Temporal = 1,
    Spatial = 2,
    Policy = 3,
    Training = 4,
    Split = 5,
    Init = 6,
};

constexpr std::uint64_t derive_seed(std::uint64_t parent, Stream stream) noexcept {
    return derive_seed(parent, static_cast<std::uint64_t>(stream));
}

/// Uniform on [0, 1).
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform on (0, 1].
inline double uniform_open0(Rng& rng) {
    return static_cast<double>((rng() >> 11) + 1) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

/// Box-Muller; one variate per call, no cached state.
inline double standard_normal(Rng& rng) {
    const double u1 = uniform_open0(rng);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

inline double exponential(Rng& rng, double rate) {
    return -std::log(uniform_open0(rng)) / rate;
}

inline Eigen::VectorXd standard_normal_vector(Rng& rng, Eigen::Index n) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = standard_normal(rng);
    return v;
}

}  // namespace crowd
