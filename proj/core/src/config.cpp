#include "primcomp/config.hpp"

#include <json.hpp>

namespace primcomp {

using nlohmann::json;

prim::PrimitiveSpec TrainConfig::primitive_spec(int index) const {
    check(index >= 0 && index <= n_foreground, "primitive index out of range");
    prim::PrimitiveSpec spec;
    spec.kind = is_background_slot(index) ? prim::Kind::Background
                                          : prim::kind_from_name(foreground_kind);
    spec.points = points;
    spec.channels = channels;
    spec.cuboid_tex = cuboid_tex;
    spec.sphere_rows = sphere_rows;
    spec.sphere_cols = sphere_cols;
    spec.cuboid_mesh_res = cuboid_mesh_res;
    spec.sphere_mesh_res = sphere_mesh_res;
    return spec;
}

geom::CameraConfig TrainConfig::camera_config() const {
    geom::CameraConfig config;
    config.radius = camera_radius;
    config.elev_min_deg = elev_min_deg;
    config.elev_max_deg = elev_max_deg;
    config.focal_px = focal_px;
    config.width = image_size;
    config.height = image_size;
    return config;
}

proj::ProjectionConfig TrainConfig::projection_config() const {
    proj::ProjectionConfig config;
    config.sigma_soft = sigma_soft;
    config.gamma_depth = gamma_depth;
    config.kernel_radius = kernel_radius;
    config.sigma_splat = sigma_splat;
    config.alpha_eps = alpha_eps;
    config.d_far = d_far();
    return config;
}

prim::DecodeBounds TrainConfig::decode_bounds() const {
    return {s_min, s_max, t_range, s_bg};
}

void TrainConfig::validate() const {
    check(learning_rate > 0, "learning rate must be positive");
    check(batch_size >= 1, "batch size must be >= 1");
    check(n_foreground >= 1, "need at least one foreground primitive");
    check(image_size >= 16 && image_size % 16 == 0,
          "image size must be a positive multiple of 16");
    check(z_dim >= 1 && channels >= 1 && points >= 1, "model dimensions must be positive");
    check(s_min > 0 && s_max > s_min && t_range > 0, "decode bounds are inconsistent");
    check(s_bg > camera_radius + t_range + s_max,
          "background scale must enclose the scene and the camera");
    check(composite_fraction >= 0 && composite_fraction <= 1, "composite fraction in [0,1]");
    check(threads >= 1, "threads must be >= 1");
    prim::kind_from_name(foreground_kind);  // throws on unknown names
}

namespace {

#define PRIMCOMP_CONFIG_FIELDS(APPLY)                                                      \
    APPLY(z_dim)                                                                           \
    APPLY(trunk_width)                                                                     \
    APPLY(trunk_layers)                                                                    \
    APPLY(lrelu_slope)                                                                     \
    APPLY(n_foreground)                                                                    \
    APPLY(foreground_kind)                                                                 \
    APPLY(points)                                                                          \
    APPLY(channels)                                                                        \
    APPLY(cuboid_tex)                                                                      \
    APPLY(sphere_rows)                                                                     \
    APPLY(sphere_cols)                                                                     \
    APPLY(cuboid_mesh_res)                                                                 \
    APPLY(sphere_mesh_res)                                                                 \
    APPLY(g2d_width)                                                                       \
    APPLY(d_width)                                                                         \
    APPLY(d_near)                                                                          \
    APPLY(s_min)                                                                           \
    APPLY(s_max)                                                                           \
    APPLY(t_range)                                                                         \
    APPLY(s_bg)                                                                            \
    APPLY(camera_radius)                                                                   \
    APPLY(elev_min_deg)                                                                    \
    APPLY(elev_max_deg)                                                                    \
    APPLY(focal_px)                                                                        \
    APPLY(image_size)                                                                      \
    APPLY(sigma_soft)                                                                      \
    APPLY(gamma_depth)                                                                     \
    APPLY(kernel_radius)                                                                   \
    APPLY(sigma_splat)                                                                     \
    APPLY(alpha_eps)                                                                       \
    APPLY(tau)                                                                             \
    APPLY(lambda_com)                                                                      \
    APPLY(lambda_geo)                                                                      \
    APPLY(gamma_r1)                                                                        \
    APPLY(sigma_t)                                                                         \
    APPLY(sigma_r_deg)                                                                     \
    APPLY(occlusion_test)                                                                  \
    APPLY(occlusion_threshold)                                                             \
    APPLY(learning_rate)                                                                   \
    APPLY(rmsprop_decay)                                                                   \
    APPLY(rmsprop_eps)                                                                     \
    APPLY(batch_size)                                                                      \
    APPLY(composite_fraction)                                                              \
    APPLY(steps)                                                                           \
    APPLY(checkpoint_every)                                                                \
    APPLY(seed)                                                                            \
    APPLY(threads)

}  // namespace

std::string TrainConfig::to_json_text() const {
    json j;
#define PRIMCOMP_WRITE(name) j[#name] = name;
    PRIMCOMP_CONFIG_FIELDS(PRIMCOMP_WRITE)
#undef PRIMCOMP_WRITE
    return j.dump(2) + "\n";
}

TrainConfig TrainConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        fail_invalid(std::string("config is not valid JSON: ") + e.what());
    }
    TrainConfig config;
#define PRIMCOMP_READ(name)                                       \
    if (j.contains(#name)) {                                      \
        j.at(#name).get_to(config.name);                          \
        j.erase(#name);                                           \
    }
    PRIMCOMP_CONFIG_FIELDS(PRIMCOMP_READ)
#undef PRIMCOMP_READ
    if (!j.empty()) {
        fail_invalid("config has unknown field '" + j.begin().key() + "'");
    }
    config.validate();
    return config;
}

uint64_t TrainConfig::config_hash() const {
    std::string text = to_json_text();
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace primcomp
