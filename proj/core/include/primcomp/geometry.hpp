#pragma once

#include "primcomp/ops.hpp"
#include "primcomp/rng.hpp"

namespace primcomp::geom {

struct Vec2 {
    real x = 0, y = 0;
};

struct Vec3 {
    real x = 0, y = 0, z = 0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(real s) const { return {x * s, y * s, z * s}; }
    real dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    real norm() const;
    Vec3 normalized() const;
};

struct Mat3 {
    // row-major
    real m[9] = {1, 0, 0, 0, 1, 0, 0, 0, 1};

    static Mat3 identity() { return {}; }
    real& operator()(int r, int c) { return m[r * 3 + c]; }
    real operator()(int r, int c) const { return m[r * 3 + c]; }
    Mat3 transposed() const;
    Mat3 operator*(const Mat3& o) const;
    Vec3 operator*(const Vec3& v) const;
    real det() const;
};

bool is_rotation(const Mat3& r, real tol = real(1e-6));

// Per-primitive rigid pose with anisotropic scale.
struct Pose {
    Vec3 scale{1, 1, 1};
    Mat3 rotation;
    Vec3 translation{0, 0, 0};
};

bool pose_valid(const Pose& pose, real tol = real(1e-6));

// Pinhole camera: p_cam = R * p_world + t, pixel = (K p_cam).xy / p_cam.z.
// Pixel centres sit at integer coordinates; depth is camera-space z.
struct Camera {
    Mat3 intrinsics;   // upper-triangular K in pixels
    Mat3 rotation;     // world-to-camera
    Vec3 translation;  // world-to-camera
    int width = 64;
    int height = 64;

    Vec3 center() const;  // camera position in world coordinates
};

void validate_camera(const Camera& cam);

struct RelativeTransform {
    Mat3 rotation;
    Vec3 translation{0, 0, 0};

    bool is_identity() const;
    RelativeTransform inverse() const;
    Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
};

// --- plain (non-differentiable) helpers ---

// Rodrigues formula; the zero vector maps to the identity.
Mat3 rotation_from_axis_angle(const Vec3& axis_angle);

Vec2 project_point(const Camera& cam, const Vec3& world, real& depth, bool& valid);

// Exact inverse of project_point; throws for depth <= 0.
Vec3 backproject(const Camera& cam, const Vec2& pixel, real depth);

// --- differentiable versions ---

// axis_angle (3) -> rotation (3,3), differentiable wrt the three parameters.
Tensor rotation_from_axis_angle_t(const Tensor& axis_angle);

struct ProjectResult {
    Tensor pixels;  // (n,2)
    Tensor depths;  // (n)
    Tensor valid;   // (n) detached, 0 for points at or behind the camera
};

// points (n,3) world coordinates -> pixels + camera-space depths.
ProjectResult project(const Camera& cam, const Tensor& points);

// --- camera sampling ---

struct CameraConfig {
    real radius = real(2.5);
    real elev_min_deg = real(10);
    real elev_max_deg = real(80);
    real focal_px = real(60);
    int width = 64;
    int height = 64;
};

Camera camera_from_angles(real azimuth_rad, real elevation_rad, const CameraConfig& config);

// Azimuth uniform in [0, 2pi), elevation uniform in the configured range,
// positioned on the fixed-radius upper hemisphere looking at the origin.
Camera sample_camera(Rng& rng, const CameraConfig& config);

}  // namespace primcomp::geom
