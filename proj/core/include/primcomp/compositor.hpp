#pragma once

#include <span>
#include <vector>

#include "primcomp/tape.hpp"

namespace primcomp::comp {

// One refined primitive ready for composition.
struct RefinedLayer {
    Tensor color;  // (3,H,W) in [0,1]
    Tensor alpha;  // (H,W) in [0,1]
    Tensor depth;  // (H,W) positive; ordering input only, receives no gradient
    bool is_background = false;
    int id = 0;  // stable primitive id, depth tie-breaker
};

struct CompositeResult {
    Tensor image;  // (3,H,W)
    // per-layer effective contribution a_i * prod_{j<i} (1-a_j), input order,
    // detached (evaluation output, not a gradient path)
    std::vector<Tensor> instance_weights;
};

// Front-to-back over-compositing in ascending per-pixel depth; ties break on
// the stable layer id and the background is always last with alpha forced
// to 1. Gradients flow to colors and alphas; the depth ordering is a frozen
// discrete decision.
CompositeResult composite(std::span<const RefinedLayer> layers);

// True iff compositing the permuted layers reproduces the image and the
// (permutation-aligned) instance weights bitwise.
bool composite_permutation_check(std::span<const RefinedLayer> layers,
                                 std::span<const size_t> permutation);

}  // namespace primcomp::comp
