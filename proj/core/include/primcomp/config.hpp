#pragma once

#include <string>

#include "primcomp/geometry.hpp"
#include "primcomp/primitives.hpp"
#include "primcomp/projection.hpp"

namespace primcomp {

// Full run configuration. Mirrors the config file field-for-field and
// round-trips losslessly through its JSON form.
struct TrainConfig {
    // 3D generator
    int z_dim = 128;
    int trunk_width = 256;
    int trunk_layers = 2;
    real lrelu_slope = real(0.2);
    // scene
    int n_foreground = 3;
    std::string foreground_kind = "point-cloud";
    int points = 128;    // M
    int channels = 12;   // K
    int cuboid_tex = 8;  // texels per cuboid face edge
    int sphere_rows = 16;
    int sphere_cols = 32;
    int cuboid_mesh_res = 1;
    int sphere_mesh_res = 16;
    // 2D generator / discriminator
    int g2d_width = 8;
    int d_width = 12;
    real d_near = real(0.1);
    // decode bounds (scene units)
    real s_min = real(0.05);
    real s_max = real(0.5);
    real t_range = real(1.0);
    real s_bg = real(5.0);
    // camera
    real camera_radius = real(2.5);
    real elev_min_deg = real(10);
    real elev_max_deg = real(80);
    real focal_px = real(60);
    int image_size = 64;
    // projection
    real sigma_soft = real(3.0);
    real gamma_depth = real(0.1);
    real kernel_radius = real(2.0);
    real sigma_splat = real(1.5);
    real alpha_eps = real(1e-3);
    // losses
    real tau = real(0.1);
    real lambda_com = real(1.0);
    real lambda_geo = real(1.0);
    real gamma_r1 = real(10.0);
    real sigma_t = real(0.1);
    real sigma_r_deg = real(10.0);
    bool occlusion_test = true;
    real occlusion_threshold = real(0.05);
    // optimization
    real learning_rate = real(1e-4);
    real rmsprop_decay = real(0.99);
    real rmsprop_eps = real(1e-8);
    int batch_size = 16;
    real composite_fraction = real(0.5);  // share of c=1 samples per batch
    int64_t steps = 2000;
    int64_t checkpoint_every = 500;
    uint64_t seed = 1;
    int threads = 1;

    int primitive_count() const { return n_foreground + 1; }
    bool is_background_slot(int index) const { return index == n_foreground; }
    prim::PrimitiveSpec primitive_spec(int index) const;
    geom::CameraConfig camera_config() const;
    proj::ProjectionConfig projection_config() const;
    prim::DecodeBounds decode_bounds() const;
    real d_far() const { return 2 * (camera_radius + s_bg); }

    void validate() const;

    std::string to_json_text() const;
    static TrainConfig from_json_text(const std::string& text);
    // FNV-1a of the canonical JSON form
    uint64_t config_hash() const;
};

}  // namespace primcomp
