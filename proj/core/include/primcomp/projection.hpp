#pragma once

#include <map>
#include <memory>
#include <span>

#include "primcomp/primitives.hpp"

namespace primcomp::proj {

struct ProjectionConfig {
    real sigma_soft = real(3.0);     // squared pixels
    real gamma_depth = real(0.1);    // scene units, depth softmax temperature
    real kernel_radius = real(2.0);  // pixels, alpha smoothing
    real sigma_splat = real(1.5);    // pixels
    real alpha_eps = real(1e-3);     // below this alpha the depth reads d_far
    real d_far = real(15.0);
    real z_clip = real(1e-6);
    // triangle influence below this is truncated (keeps the rasterizer local)
    real influence_cutoff = real(1e-12);
};

// The currency between projection, refinement and composition.
struct FeatureTriplet {
    Tensor X;  // (F,H,W)
    Tensor A;  // (H,W) in [0,1]
    Tensor D;  // (H,W) positive, d_far where A < alpha_eps
};

class MeshCache {
public:
    std::shared_ptr<const prim::CanonicalMesh> get(prim::Kind kind, int resolution);

private:
    std::map<std::pair<prim::Kind, int>, std::shared_ptr<const prim::CanonicalMesh>> cache_;
};

// --- soft (differentiable) rasterization ---

struct SoftRasterInputs {
    Tensor pixels;  // (V,2) projected vertices, typically on tape
    Tensor depths;  // (V) camera-space z, typically on tape
    Tensor valid;   // (V) detached; triangles with an invalid vertex are culled
    std::shared_ptr<const prim::CanonicalMesh> mesh;
    Tensor texels;              // (count,K); undefined => silhouette/depth only
    prim::TextureDesc texture;  // used when texels defined
};

struct SoftRasterOutput {
    Tensor features;    // (K,H,W); undefined in silhouette/depth-only mode
    Tensor silhouette;  // (H,W) = 1 - prod_j (1 - w_j)
    Tensor depth;       // (H,W) depth-softmax aggregate, blends to d_far
};

// Per-triangle influence w_j(p) = sigmoid(sign * dist^2 / sigma_soft) with
// the exact 2-D point-to-triangle distance; features and depths interpolated
// with barycentrics clamped to the triangle and aggregated with a
// depth-weighted softmax of temperature gamma_depth.
SoftRasterOutput rasterize_mesh_soft(const SoftRasterInputs& in, int height, int width,
                                     const ProjectionConfig& config);

// Isotropic Gaussian point splatting, truncated at 3 sigma and normalized by
// the accumulated weight.
Tensor splat_points(const Tensor& pixels, const Tensor& valid, const Tensor& features, int height,
                    int width, real sigma_splat);

// Gaussian blur (sigma = radius/2, truncated at radius) followed by a clamp
// to [0,1]; radius 0 is the identity.
Tensor silhouette_to_alpha(const Tensor& silhouette, real kernel_radius);

// Alpha/depth of a point-cloud primitive: the unit cuboid under the same
// pose, soft-rasterized and smoothed.
std::pair<Tensor, Tensor> bbox_alpha_depth(const prim::PrimitiveAttr& attr, const geom::Camera& cam,
                                           const ProjectionConfig& config, MeshCache& meshes);

// Full per-primitive projection dispatch.
FeatureTriplet project_primitive(const prim::PrimitiveAttr& attr, const geom::Camera& cam,
                                 const ProjectionConfig& config, MeshCache& meshes);

// --- exact reference rasterizer (test oracle and dataset renderer) ---

struct ReferenceItem {
    std::shared_ptr<const prim::CanonicalMesh> mesh;
    geom::Pose pose;
    // one of: flat per-item color, or a texture with texture_desc addressing
    std::vector<real> flat_color;
    Tensor texels;  // (count,C)
    prim::TextureDesc texture;
};

struct ReferenceImage {
    int channels = 0, height = 0, width = 0;
    std::vector<real> color;    // C*H*W
    std::vector<real> depth;    // H*W, d_far where no surface
    std::vector<int> instance;  // H*W, item index or -1

    real color_at(int c, int y, int x) const { return color[(c * height + y) * width + x]; }
};

// Hard z-buffer with nearest-texel sampling; deterministic; emits per-pixel
// instance ids.
ReferenceImage rasterize_reference(std::span<const ReferenceItem> items, const geom::Camera& cam,
                                   real d_far);

}  // namespace primcomp::proj
