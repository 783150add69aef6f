#include "primcomp/rng.hpp"

#include <cmath>

namespace primcomp {

namespace {

inline uint64_t splitmix64(uint64_t& x) {
    x += 0x9e3779b97f4a7c15ull;
    uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline uint64_t rotl(uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

constexpr double kTwoPi = 6.283185307179586476925286766559;

}  // namespace

Rng::Rng(uint64_t seed) {
    uint64_t s = seed;
    for (auto& w : state_) w = splitmix64(s);
}

// xoshiro256++
uint64_t Rng::next_u64() {
    const uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
}

real Rng::uniform() {
    return static_cast<real>((next_u64() >> 11) * 0x1.0p-53);
}

real Rng::uniform(real lo, real hi) {
    return lo + (hi - lo) * uniform();
}

real Rng::normal() {
    // u1 in (0, 1] so the log is finite.
    double u1 = ((next_u64() >> 11) + 1) * 0x1.0p-53;
    double u2 = (next_u64() >> 11) * 0x1.0p-53;
    return static_cast<real>(std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2));
}

real Rng::normal(real mean, real stddev) {
    return mean + stddev * normal();
}

int64_t Rng::uniform_int(int64_t n) {
    check(n > 0, "uniform_int requires n > 0");
    return static_cast<int64_t>(next_u64() % static_cast<uint64_t>(n));
}

uint64_t derive_seed(uint64_t seed, std::initializer_list<uint64_t> stream) {
    uint64_t x = seed;
    uint64_t acc = splitmix64(x);
    for (uint64_t v : stream) {
        x = acc ^ (v + 0x9e3779b97f4a7c15ull + (acc << 6) + (acc >> 2));
        acc = splitmix64(x);
    }
    return acc;
}

}  // namespace primcomp
