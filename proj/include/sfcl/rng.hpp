#pragma once

#include <cstdint>
#include <random>

namespace sfcl {

// splitmix64 step; the usual way to expand one master seed into independent
// stream seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Deterministic seed derivation: mix the master seed with a stream tag and
// up to three indices. Same inputs, same sub-seed, on every platform.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag,
                                 std::uint64_t a = 0, std::uint64_t b = 0,
                                 std::uint64_t c = 0) {
    std::uint64_t s = master;
    std::uint64_t h = splitmix64(s);
    s ^= tag * 0x9E3779B97F4A7C15ull;
    h ^= splitmix64(s);
    s ^= a + 0xD1B54A32D192ED03ull;
    h ^= splitmix64(s);
    s ^= b + 0x8CB92BA72F3D8DD7ull;
    h ^= splitmix64(s);
    s ^= c + 0xEB44ACCAB455D165ull;
    h ^= splitmix64(s);
    return h;
}

// Stream tags. Distinct constants so derived streams never collide.
namespace seed_tag {
constexpr std::uint64_t scene = 1;
constexpr std::uint64_t corrupt = 2;
constexpr std::uint64_t params = 3;
constexpr std::uint64_t shuffle = 4;
constexpr std::uint64_t perturb = 5;
}  // namespace seed_tag

inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

}  // namespace sfcl
