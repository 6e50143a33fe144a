#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include <boost/random/normal_distribution.hpp>

namespace potts {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Key for the stream addressed by (seed, path). Streams depend only on the
// key, never on which thread or in which order they are consumed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path)
{
    std::uint64_t h = splitmix64(seed ^ 0x5851f42d4c957f2dULL);
    for (std::uint64_t p : path) h = splitmix64(h ^ splitmix64(p + 0x14057b7ef767814fULL));
    return h;
}

inline Rng make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> path = {})
{
    const std::uint64_t key = derive_seed(seed, path);
    std::seed_seq seq{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32),
                      static_cast<std::uint32_t>(splitmix64(key)), static_cast<std::uint32_t>(splitmix64(key) >> 32)};
    return Rng(seq);
}

// Ziggurat normal sampler.
class Normal {
public:
    double operator()(Rng& rng) { return dist_(rng); }

private:
    boost::random::normal_distribution<double> dist_;
};

// Uniform on [0, 1).
inline double uniform01(Rng& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace potts
