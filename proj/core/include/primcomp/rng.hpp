#pragma once

#include <cstdint>
#include <initializer_list>

#include "primcomp/types.hpp"

namespace primcomp {

// Deterministic PRNG with hand-rolled distributions. The standard library
// distributions are implementation-defined, which would break the
// reproducibility guarantees, so only the raw engine output is used here.
class Rng {
public:
    explicit Rng(uint64_t seed);

    uint64_t next_u64();

    // [0, 1)
    real uniform();
    real uniform(real lo, real hi);
    // Box-Muller, no cached spare: each call consumes exactly two uniforms.
    real normal();
    real normal(real mean, real stddev);
    // [0, n)
    int64_t uniform_int(int64_t n);

private:
    uint64_t state_[4];
};

// Hash-combines a seed with stream identifiers so independent consumers
// (per-image, per-step, per-sample) can derive disjoint deterministic streams.
uint64_t derive_seed(uint64_t seed, std::initializer_list<uint64_t> stream);

}  // namespace primcomp
