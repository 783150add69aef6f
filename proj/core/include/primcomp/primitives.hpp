#pragma once

#include <array>
#include <string>
#include <vector>

#include "primcomp/geometry.hpp"

namespace primcomp::prim {

enum class Kind { PointCloud, Cuboid, Sphere, Background };

std::string kind_name(Kind kind);
Kind kind_from_name(const std::string& name);

// Static description of one primitive slot: representation plus resolution
// choices. Fixed per run.
struct PrimitiveSpec {
    Kind kind = Kind::PointCloud;
    int points = 128;    // point-cloud M
    int channels = 12;   // feature dimension K (also texel channels)
    int cuboid_tex = 8;  // texels per cuboid face edge
    int sphere_rows = 16;
    int sphere_cols = 32;
    int cuboid_mesh_res = 1;
    int sphere_mesh_res = 16;
};

// Decoded pose/appearance squashing bounds, in scene units.
struct DecodeBounds {
    real s_min = real(0.05);
    real s_max = real(0.5);
    real t_range = real(1.0);
    real s_bg = real(5.0);
};

// Number of texels of the kind's texture (0 for point clouds).
int64_t texel_count(const PrimitiveSpec& spec);
// Length of the raw generator output consumed by decode_primitive.
int64_t raw_budget(const PrimitiveSpec& spec);

// Unit-scale triangle mesh with per-vertex UVs and a texture page per
// triangle (cuboid faces are separate pages; spheres use one page).
struct CanonicalMesh {
    std::vector<geom::Vec3> vertices;
    std::vector<std::array<int, 3>> triangles;
    std::vector<geom::Vec2> uv;
    std::vector<int> page;

    real surface_area() const;
};

// Cuboid [-1,1]^3 with 2*res^2 triangles per face, lat-long sphere of radius
// 1, or the background sphere (inward orientation). resolution >= 1.
CanonicalMesh canonical_mesh(Kind kind, int resolution);

// Texture addressing shared by the soft and the reference rasterizer.
struct TextureDesc {
    int pages = 1;
    int rows = 1;
    int cols = 1;
    int channels = 1;

    int64_t count() const { return int64_t(pages) * rows * cols; }
    // nearest-texel index for (u,v) in [0,1]^2 on `page`
    int64_t texel(int page, real u, real v) const;
};

TextureDesc texture_desc(const PrimitiveSpec& spec);

// Decoded primitive: pose and appearance tensors, recorded on the caller's
// tape when the raw vector is.
struct PrimitiveAttr {
    PrimitiveSpec spec;
    Tensor scale;        // (3)
    Tensor axis_angle;   // (3)
    Tensor rotation;     // (3,3)
    Tensor translation;  // (3)
    // point clouds
    Tensor point_locations;  // (M,3) in [-1,1]^3
    Tensor point_features;   // (M,K)
    // mesh kinds
    Tensor texels;  // (count,K)

    geom::Pose pose_values() const;
};

// scale = s_min + (s_max-s_min)*sigmoid(raw), rotation via Rodrigues,
// translation = t_range*tanh(raw), point locations tanh-squashed, features
// and texels passed through. The background ignores the pose entries and
// emits the fixed pose (R = I, t = 0, s = s_bg).
PrimitiveAttr decode_primitive(const Tensor& raw, const PrimitiveSpec& spec, const DecodeBounds& bounds);

// Builds a PrimitiveAttr from explicit plain values (used by scene editing
// and tests); tensors are detached.
PrimitiveAttr make_attr(const PrimitiveSpec& spec, const geom::Pose& pose, Tensor appearance_points,
                        Tensor appearance_features, Tensor texels);

// p_world = R (s ⊙ p) + t for canonical points (n,3).
Tensor transform_to_world(const PrimitiveAttr& attr, const Tensor& canonical_points);
Tensor transform_to_world(const Tensor& scale, const Tensor& rotation, const Tensor& translation,
                          const Tensor& canonical_points);

}  // namespace primcomp::prim
