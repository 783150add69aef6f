#pragma once

#include "primcomp/projection.hpp"

namespace primcomp::geom {

struct WarpOptions {
    // z-test between the warped depth and the target depth
    bool occlusion_test = true;
    real occlusion_threshold = real(0.05);  // scene units
    real z_clip = real(1e-6);
};

struct WarpResult {
    proj::FeatureTriplet triplet;
    Tensor mask;  // (H,W) detached; 0 on out-of-bounds, behind-camera or occluded pixels
};

// Inverse (gather) warp. `source` holds images rendered after applying
// `transform` to the scene; each target pixel is backprojected with
// target_depth, mapped through transform, projected into the source view and
// bilinearly sampled. Warped depths are re-expressed in the target frame.
// Gradients flow to the source maps and to target_depth. An exactly-identity
// transform returns the inputs bitwise with a full mask.
WarpResult warp_image(const proj::FeatureTriplet& source, const Camera& cam,
                      const RelativeTransform& transform, const Tensor& target_depth,
                      const WarpOptions& options = {});

// Uses the source triplet's own depth map as the target depth.
WarpResult warp_image(const proj::FeatureTriplet& source, const Camera& cam,
                      const RelativeTransform& transform, const WarpOptions& options = {});

}  // namespace primcomp::geom
