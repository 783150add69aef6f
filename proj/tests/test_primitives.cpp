#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "primcomp/gradcheck.hpp"
#include "primcomp/primitives.hpp"

using namespace primcomp;
using namespace primcomp::prim;
namespace op = primcomp::ops;

namespace {

Tensor random_raw(const PrimitiveSpec& spec, Rng& rng, real lo = -2, real hi = 2) {
    Tensor raw = Tensor::zeros({raw_budget(spec)});
    for (int64_t i = 0; i < raw.size(); ++i) raw.data()[i] = rng.uniform(lo, hi);
    return raw;
}

}  // namespace

TEST(CanonicalMesh, CuboidResolutionOne) {
    CanonicalMesh mesh = canonical_mesh(Kind::Cuboid, 1);
    EXPECT_EQ(mesh.triangles.size(), 12u);
    std::set<std::array<int, 3>> corners;
    for (const auto& v : mesh.vertices) {
        corners.insert({int(std::lround(v.x)), int(std::lround(v.y)), int(std::lround(v.z))});
    }
    EXPECT_EQ(corners.size(), 8u);
}

TEST(CanonicalMesh, SphereVerticesOnUnitSphere) {
    CanonicalMesh mesh = canonical_mesh(Kind::Sphere, 8);
    for (const auto& v : mesh.vertices) EXPECT_NEAR(v.norm(), 1.0, 1e-9);
}

TEST(CanonicalMesh, SphereSurfaceArea) {
    CanonicalMesh mesh = canonical_mesh(Kind::Sphere, 32);
    real area = mesh.surface_area();
    EXPECT_NEAR(area, 4 * M_PI, 0.02 * 4 * M_PI);
}

TEST(CanonicalMesh, OrientationConventions) {
    // outward for cuboid/sphere, inward for the background sphere
    auto orientation = [](const CanonicalMesh& mesh) {
        real acc = 0;
        for (const auto& t : mesh.triangles) {
            geom::Vec3 a = mesh.vertices[t[0]], b = mesh.vertices[t[1]], c = mesh.vertices[t[2]];
            geom::Vec3 n = (b - a).cross(c - a);
            geom::Vec3 centroid = (a + b + c) * real(1.0 / 3.0);
            if (n.norm() > 1e-12) acc += n.dot(centroid) > 0 ? 1 : -1;
        }
        return acc;
    };
    EXPECT_GT(orientation(canonical_mesh(Kind::Cuboid, 2)), 0);
    EXPECT_GT(orientation(canonical_mesh(Kind::Sphere, 8)), 0);
    EXPECT_LT(orientation(canonical_mesh(Kind::Background, 8)), 0);
}

TEST(Decode, TanhAndSigmoidMidpoints) {
    PrimitiveSpec spec;
    spec.kind = Kind::PointCloud;
    DecodeBounds bounds;
    Tensor raw = Tensor::zeros({raw_budget(spec)});
    PrimitiveAttr attr = decode_primitive(raw, spec, bounds);
    for (int i = 0; i < 3; ++i) {
        EXPECT_DOUBLE_EQ(attr.translation.at(i), 0.0);                               // tanh(0)
        EXPECT_DOUBLE_EQ(attr.scale.at(i), (bounds.s_min + bounds.s_max) / 2);       // sigmoid(0)
    }
}

TEST(Decode, PoseInvariantsOverRandomRaws) {
    PrimitiveSpec spec;
    spec.kind = Kind::Cuboid;
    DecodeBounds bounds;
    Rng rng(71);
    for (int i = 0; i < 1000; ++i) {
        PrimitiveAttr attr = decode_primitive(random_raw(spec, rng, -6, 6), spec, bounds);
        geom::Pose pose = attr.pose_values();
        ASSERT_TRUE(pose_valid(pose));
        EXPECT_GE(pose.scale.x, bounds.s_min);
        EXPECT_LE(pose.scale.x, bounds.s_max);
        EXPECT_LE(std::abs(pose.translation.x), bounds.t_range);
    }
}

TEST(Decode, NonFiniteRawRejectedWithIndex) {
    PrimitiveSpec spec;
    spec.kind = Kind::PointCloud;
    Tensor raw = Tensor::zeros({raw_budget(spec)});
    raw.data()[17] = std::numeric_limits<real>::quiet_NaN();
    try {
        decode_primitive(raw, spec, DecodeBounds{});
        FAIL() << "expected rejection";
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("17"), std::string::npos);
    }
}

TEST(Decode, BackgroundIgnoresPoseEntries) {
    PrimitiveSpec spec;
    spec.kind = Kind::Background;
    DecodeBounds bounds;
    Rng rng(73);
    PrimitiveAttr a = decode_primitive(random_raw(spec, rng), spec, bounds);
    PrimitiveAttr b = decode_primitive(random_raw(spec, rng), spec, bounds);
    for (int i = 0; i < 3; ++i) {
        EXPECT_DOUBLE_EQ(a.scale.at(i), bounds.s_bg);
        EXPECT_DOUBLE_EQ(a.scale.at(i), b.scale.at(i));
        EXPECT_DOUBLE_EQ(a.translation.at(i), b.translation.at(i));
    }
    for (int i = 0; i < 9; ++i) EXPECT_DOUBLE_EQ(a.rotation.at(i), b.rotation.at(i));
}

TEST(Transform, IdentityPoseLeavesPointsUnchanged) {
    PrimitiveSpec spec;
    geom::Pose pose;  // identity
    PrimitiveAttr attr = make_attr(spec, pose, {}, {}, {});
    Tensor pts = Tensor::from({2, 3}, {0.1, 0.2, 0.3, -0.4, 0.5, -0.6});
    Tensor out = transform_to_world(attr, pts);
    for (int64_t i = 0; i < pts.size(); ++i) EXPECT_DOUBLE_EQ(out.at(i), pts.at(i));
}

TEST(Transform, ScaleThenTranslate) {
    PrimitiveSpec spec;
    geom::Pose pose;
    pose.scale = {2, 2, 2};
    pose.translation = {1, 0, 0};
    PrimitiveAttr attr = make_attr(spec, pose, {}, {}, {});
    Tensor out = transform_to_world(attr, Tensor::from({1, 3}, {1, 1, 1}));
    EXPECT_DOUBLE_EQ(out.at(0), 3);
    EXPECT_DOUBLE_EQ(out.at(1), 2);
    EXPECT_DOUBLE_EQ(out.at(2), 2);
}

TEST(Transform, GradcheckWrtPoseParameters) {
    Rng rng(79);
    Tensor axis_angle = Tensor::from({3}, {0.4, -0.2, 0.9});
    Tensor scale = Tensor::from({3}, {0.3, 0.2, 0.4});
    Tensor translation = Tensor::from({3}, {0.1, -0.3, 0.2});
    Tensor pts = Tensor::zeros({4, 3});
    for (int64_t i = 0; i < pts.size(); ++i) pts.data()[i] = rng.uniform(-1, 1);
    std::vector<Tensor> inputs = {axis_angle, scale, translation, pts};
    auto f = [](Tape&, std::span<const Tensor> in) {
        Tensor rot = geom::rotation_from_axis_angle_t(in[0]);
        Tensor world = transform_to_world(in[1], rot, in[2], in[3]);
        return op::sum(op::square(world));
    };
    EXPECT_LT(gradcheck(f, inputs).max_rel_error, 1e-4);
}

TEST(Transform, RigidEquivariance) {
    // pure rigid poses (s = 1) compose: applying pose2 after pose1 equals the
    // composed pose applied once
    geom::Pose p1, p2;
    p1.rotation = geom::rotation_from_axis_angle({0.3, 0.1, -0.2});
    p1.translation = {0.2, -0.1, 0.4};
    p2.rotation = geom::rotation_from_axis_angle({-0.5, 0.7, 0.2});
    p2.translation = {-0.3, 0.2, 0.1};

    geom::Pose composed;
    composed.rotation = p2.rotation * p1.rotation;
    composed.translation = p2.rotation * p1.translation + p2.translation;

    PrimitiveSpec spec;
    Tensor pts = Tensor::from({2, 3}, {0.5, -0.2, 0.7, -0.9, 0.1, 0.3});
    Tensor seq = transform_to_world(make_attr(spec, p2, {}, {}, {}),
                                    transform_to_world(make_attr(spec, p1, {}, {}, {}), pts));
    Tensor once = transform_to_world(make_attr(spec, composed, {}, {}, {}), pts);
    for (int64_t i = 0; i < pts.size(); ++i) EXPECT_NEAR(seq.at(i), once.at(i), 1e-12);
}

TEST(TextureDescTest, NearestTexelAddressing) {
    PrimitiveSpec spec;
    spec.kind = Kind::Sphere;
    spec.sphere_rows = 4;
    spec.sphere_cols = 8;
    TextureDesc desc = texture_desc(spec);
    EXPECT_EQ(desc.count(), 32);
    EXPECT_EQ(desc.texel(0, 0.0, 0.0), 0);
    EXPECT_EQ(desc.texel(0, 0.999, 0.999), 31);
    EXPECT_EQ(desc.texel(0, 1.0, 1.0), 31);  // clamped at the seam
    // azimuth wrap adjacency: u just below 1 is the last column, u = 0 the first
    EXPECT_EQ(desc.texel(0, 0.99, 0.1), 7);
    EXPECT_EQ(desc.texel(0, 0.01, 0.1), 0);
}
