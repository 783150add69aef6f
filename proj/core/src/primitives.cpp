#include "primcomp/primitives.hpp"

#include <cmath>

namespace primcomp::prim {

namespace op = primcomp::ops;
using geom::Vec2;
using geom::Vec3;

std::string kind_name(Kind kind) {
    switch (kind) {
        case Kind::PointCloud: return "point-cloud";
        case Kind::Cuboid: return "cuboid";
        case Kind::Sphere: return "sphere";
        case Kind::Background: return "background";
    }
    return "?";
}

Kind kind_from_name(const std::string& name) {
    if (name == "point-cloud") return Kind::PointCloud;
    if (name == "cuboid") return Kind::Cuboid;
    if (name == "sphere") return Kind::Sphere;
    if (name == "background") return Kind::Background;
    fail_invalid("unknown primitive kind '" + name + "'");
}

int64_t texel_count(const PrimitiveSpec& spec) {
    switch (spec.kind) {
        case Kind::PointCloud: return 0;
        case Kind::Cuboid: return int64_t(6) * spec.cuboid_tex * spec.cuboid_tex;
        case Kind::Sphere:
        case Kind::Background: return int64_t(spec.sphere_rows) * spec.sphere_cols;
    }
    return 0;
}

int64_t raw_budget(const PrimitiveSpec& spec) {
    int64_t pose = 9;
    if (spec.kind == Kind::PointCloud) {
        return pose + int64_t(spec.points) * (3 + spec.channels);
    }
    return pose + texel_count(spec) * spec.channels;
}

real CanonicalMesh::surface_area() const {
    real area = 0;
    for (const auto& t : triangles) {
        Vec3 e1 = vertices[t[1]] - vertices[t[0]];
        Vec3 e2 = vertices[t[2]] - vertices[t[0]];
        area += e1.cross(e2).norm() / 2;
    }
    return area;
}

namespace {

CanonicalMesh cuboid_mesh(int res) {
    CanonicalMesh mesh;
    // face frames chosen so that du x dv points outward
    struct Face {
        Vec3 origin, du, dv;
    };
    const Face faces[6] = {
        {{1, -1, -1}, {0, 2, 0}, {0, 0, 2}},    // +x
        {{-1, -1, -1}, {0, 0, 2}, {0, 2, 0}},   // -x
        {{-1, 1, -1}, {0, 0, 2}, {2, 0, 0}},    // +y
        {{-1, -1, -1}, {2, 0, 0}, {0, 0, 2}},   // -y
        {{-1, -1, 1}, {2, 0, 0}, {0, 2, 0}},    // +z
        {{-1, -1, -1}, {0, 2, 0}, {2, 0, 0}},   // -z
    };
    for (int f = 0; f < 6; ++f) {
        int base = static_cast<int>(mesh.vertices.size());
        for (int j = 0; j <= res; ++j) {
            for (int i = 0; i <= res; ++i) {
                real u = real(i) / res, v = real(j) / res;
                mesh.vertices.push_back(faces[f].origin + faces[f].du * u + faces[f].dv * v);
                mesh.uv.push_back({u, v});
            }
        }
        int stride = res + 1;
        for (int j = 0; j < res; ++j) {
            for (int i = 0; i < res; ++i) {
                int v00 = base + j * stride + i;
                int v10 = v00 + 1;
                int v01 = v00 + stride;
                int v11 = v01 + 1;
                mesh.triangles.push_back({v00, v10, v11});
                mesh.page.push_back(f);
                mesh.triangles.push_back({v00, v11, v01});
                mesh.page.push_back(f);
            }
        }
    }
    return mesh;
}

CanonicalMesh sphere_mesh(int res, bool inward) {
    CanonicalMesh mesh;
    int rows = res, cols = 2 * res;
    for (int i = 0; i <= rows; ++i) {
        real theta = real(M_PI) * i / rows;  // from the +z pole
        for (int j = 0; j <= cols; ++j) {
            real phi = real(2 * M_PI) * j / cols;
            mesh.vertices.push_back({std::sin(theta) * std::cos(phi),
                                     std::sin(theta) * std::sin(phi), std::cos(theta)});
            mesh.uv.push_back({real(j) / cols, real(i) / rows});
        }
    }
    int stride = cols + 1;
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            int v00 = i * stride + j;
            int v10 = v00 + 1;           // +phi
            int v01 = v00 + stride;      // +theta
            int v11 = v01 + 1;
            // natural winding is inward; swap for the outward sphere
            if (inward) {
                mesh.triangles.push_back({v00, v10, v11});
                mesh.triangles.push_back({v00, v11, v01});
            } else {
                mesh.triangles.push_back({v00, v11, v10});
                mesh.triangles.push_back({v00, v01, v11});
            }
            mesh.page.push_back(0);
            mesh.page.push_back(0);
        }
    }
    return mesh;
}

}  // namespace

CanonicalMesh canonical_mesh(Kind kind, int resolution) {
    check(resolution >= 1, "mesh resolution must be >= 1");
    switch (kind) {
        case Kind::Cuboid: return cuboid_mesh(resolution);
        case Kind::Sphere: return sphere_mesh(resolution, /*inward=*/false);
        case Kind::Background: return sphere_mesh(resolution, /*inward=*/true);
        case Kind::PointCloud: fail_invalid("point clouds have no canonical mesh");
    }
    fail_invalid("bad primitive kind");
}

int64_t TextureDesc::texel(int page, real u, real v) const {
    int r = std::min(static_cast<int>(v * rows), rows - 1);
    int c = std::min(static_cast<int>(u * cols), cols - 1);
    r = std::max(r, 0);
    c = std::max(c, 0);
    return (int64_t(page) * rows + r) * cols + c;
}

TextureDesc texture_desc(const PrimitiveSpec& spec) {
    TextureDesc desc;
    desc.channels = spec.channels;
    switch (spec.kind) {
        case Kind::Cuboid:
            desc.pages = 6;
            desc.rows = spec.cuboid_tex;
            desc.cols = spec.cuboid_tex;
            break;
        case Kind::Sphere:
        case Kind::Background:
            desc.pages = 1;
            desc.rows = spec.sphere_rows;
            desc.cols = spec.sphere_cols;
            break;
        case Kind::PointCloud:
            fail_invalid("point clouds have no texture");
    }
    return desc;
}

geom::Pose PrimitiveAttr::pose_values() const {
    geom::Pose pose;
    pose.scale = {scale.at(0), scale.at(1), scale.at(2)};
    pose.translation = {translation.at(0), translation.at(1), translation.at(2)};
    for (int i = 0; i < 9; ++i) pose.rotation.m[i] = rotation.at(i);
    return pose;
}

PrimitiveAttr decode_primitive(const Tensor& raw, const PrimitiveSpec& spec, const DecodeBounds& bounds) {
    int64_t budget = raw_budget(spec);
    check(raw.defined() && raw.rank() == 1 && raw.size() == budget,
          "raw attribute vector has shape " + shape_str(raw.shape()) + ", expected (" +
              std::to_string(budget) + ") for kind " + kind_name(spec.kind));
    for (int64_t i = 0; i < raw.size(); ++i) {
        if (!std::isfinite(raw.at(i))) {
            fail_invalid("raw attribute vector has a non-finite entry at index " + std::to_string(i));
        }
    }

    PrimitiveAttr attr;
    attr.spec = spec;
    if (spec.kind == Kind::Background) {
        // fixed pose regardless of the raw pose entries
        attr.scale = Tensor::full({3}, bounds.s_bg);
        attr.axis_angle = Tensor::zeros({3});
        attr.rotation = Tensor::from({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
        attr.translation = Tensor::zeros({3});
    } else {
        Tensor raw_s = op::slice0(raw, 0, 3);
        Tensor raw_r = op::slice0(raw, 3, 6);
        Tensor raw_t = op::slice0(raw, 6, 9);
        attr.scale = op::add_scalar(op::mul_scalar(op::sigmoid(raw_s), bounds.s_max - bounds.s_min),
                                    bounds.s_min);
        attr.axis_angle = raw_r;
        attr.rotation = geom::rotation_from_axis_angle_t(raw_r);
        attr.translation = op::mul_scalar(op::tanh(raw_t), bounds.t_range);
    }

    if (spec.kind == Kind::PointCloud) {
        int64_t m = spec.points, k = spec.channels;
        Tensor raw_loc = op::slice0(raw, 9, 9 + m * 3);
        Tensor raw_feat = op::slice0(raw, 9 + m * 3, 9 + m * (3 + k));
        attr.point_locations = op::reshape(op::tanh(raw_loc), {m, 3});
        attr.point_features = op::reshape(raw_feat, {m, k});
    } else {
        int64_t count = texel_count(spec);
        Tensor raw_tex = op::slice0(raw, 9, 9 + count * spec.channels);
        attr.texels = op::reshape(raw_tex, {count, spec.channels});
    }
    return attr;
}

PrimitiveAttr make_attr(const PrimitiveSpec& spec, const geom::Pose& pose, Tensor appearance_points,
                        Tensor appearance_features, Tensor texels) {
    check(pose_valid(pose), "make_attr pose violates the pose invariants");
    PrimitiveAttr attr;
    attr.spec = spec;
    attr.scale = Tensor::from({3}, {pose.scale.x, pose.scale.y, pose.scale.z});
    attr.axis_angle = Tensor::zeros({3});
    attr.rotation = Tensor::from({3, 3}, std::vector<real>(pose.rotation.m, pose.rotation.m + 9));
    attr.translation = Tensor::from({3}, {pose.translation.x, pose.translation.y, pose.translation.z});
    attr.point_locations = std::move(appearance_points);
    attr.point_features = std::move(appearance_features);
    attr.texels = std::move(texels);
    return attr;
}

Tensor transform_to_world(const Tensor& scale, const Tensor& rotation, const Tensor& translation,
                          const Tensor& canonical_points) {
    check(canonical_points.defined() && canonical_points.rank() == 2 && canonical_points.dim(1) == 3,
          "canonical points must be (n,3), got " + shape_str(canonical_points.shape()));
    Tensor scaled = op::mul(canonical_points, op::reshape(scale, {1, 3}));
    Tensor rotated = op::matmul(scaled, rotation, false, true);  // row vectors: p R^T
    return op::add(rotated, op::reshape(translation, {1, 3}));
}

Tensor transform_to_world(const PrimitiveAttr& attr, const Tensor& canonical_points) {
    return transform_to_world(attr.scale, attr.rotation, attr.translation, canonical_points);
}

}  // namespace primcomp::prim
