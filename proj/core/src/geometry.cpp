#include "primcomp/geometry.hpp"

#include <cmath>

namespace primcomp::geom {

real Vec3::norm() const {
    return std::sqrt(x * x + y * y + z * z);
}

Vec3 Vec3::normalized() const {
    real n = norm();
    check(n > 0, "cannot normalize a zero vector");
    return {x / n, y / n, z / n};
}

Mat3 Mat3::transposed() const {
    Mat3 t;
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) t(r, c) = (*this)(c, r);
    }
    return t;
}

Mat3 Mat3::operator*(const Mat3& o) const {
    Mat3 out;
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            real acc = 0;
            for (int k = 0; k < 3; ++k) acc += (*this)(r, k) * o(k, c);
            out(r, c) = acc;
        }
    }
    return out;
}

Vec3 Mat3::operator*(const Vec3& v) const {
    return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
            m[3] * v.x + m[4] * v.y + m[5] * v.z,
            m[6] * v.x + m[7] * v.y + m[8] * v.z};
}

real Mat3::det() const {
    return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
           m[2] * (m[3] * m[7] - m[4] * m[6]);
}

bool is_rotation(const Mat3& r, real tol) {
    Mat3 rtr = r.transposed() * r;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            real expected = i == j ? real(1) : real(0);
            if (std::abs(rtr(i, j) - expected) > tol) return false;
        }
    }
    return std::abs(r.det() - real(1)) <= tol;
}

bool pose_valid(const Pose& pose, real tol) {
    if (!is_rotation(pose.rotation, tol)) return false;
    return pose.scale.x > 0 && pose.scale.y > 0 && pose.scale.z > 0;
}

Vec3 Camera::center() const {
    return rotation.transposed() * (translation * real(-1));
}

void validate_camera(const Camera& cam) {
    const Mat3& k = cam.intrinsics;
    check(k(2, 2) == 1, "camera intrinsics must have K[2][2] = 1");
    check(k(0, 0) > 0 && k(1, 1) > 0, "camera focal lengths must be positive");
    check(k(1, 0) == 0 && k(2, 0) == 0 && k(2, 1) == 0, "camera intrinsics must be upper-triangular");
    check(is_rotation(cam.rotation), "camera extrinsic rotation is not orthonormal");
    check(cam.width > 0 && cam.height > 0, "camera image size must be positive");
}

bool RelativeTransform::is_identity() const {
    static const Mat3 eye;
    for (int i = 0; i < 9; ++i) {
        if (rotation.m[i] != eye.m[i]) return false;
    }
    return translation.x == 0 && translation.y == 0 && translation.z == 0;
}

RelativeTransform RelativeTransform::inverse() const {
    RelativeTransform inv;
    inv.rotation = rotation.transposed();
    inv.translation = inv.rotation * (translation * real(-1));
    return inv;
}

namespace {

Mat3 skew(const Vec3& v) {
    Mat3 k;
    k(0, 0) = 0;
    k(0, 1) = -v.z;
    k(0, 2) = v.y;
    k(1, 0) = v.z;
    k(1, 1) = 0;
    k(1, 2) = -v.x;
    k(2, 0) = -v.y;
    k(2, 1) = v.x;
    k(2, 2) = 0;
    return k;
}

// sin(t)/t and (1-cos(t))/t^2 with series fallbacks around zero.
void rodrigues_coeffs(real theta, real& a, real& b) {
    real t2 = theta * theta;
    if (t2 < real(1e-12)) {
        a = 1 - t2 / 6;
        b = real(0.5) - t2 / 24;
    } else {
        a = std::sin(theta) / theta;
        b = (1 - std::cos(theta)) / t2;
    }
}

// derivatives of the coefficients wrt theta
void rodrigues_coeff_derivs(real theta, real& da, real& db) {
    if (theta < real(1e-4)) {
        da = -theta / 3 + theta * theta * theta / 30;
        db = -theta / 12 + theta * theta * theta / 180;
    } else {
        real t2 = theta * theta;
        da = std::cos(theta) / theta - std::sin(theta) / t2;
        db = std::sin(theta) / t2 - 2 * (1 - std::cos(theta)) / (t2 * theta);
    }
}

Mat3 rodrigues(const Vec3& v) {
    real theta = v.norm();
    real a, b;
    rodrigues_coeffs(theta, a, b);
    Mat3 k = skew(v);
    Mat3 k2 = k * k;
    Mat3 r;
    for (int i = 0; i < 9; ++i) r.m[i] = Mat3::identity().m[i] + a * k.m[i] + b * k2.m[i];
    return r;
}

}  // namespace

Mat3 rotation_from_axis_angle(const Vec3& axis_angle) {
    return rodrigues(axis_angle);
}

Tensor rotation_from_axis_angle_t(const Tensor& axis_angle) {
    check(axis_angle.defined() && axis_angle.size() == 3,
          "rotation_from_axis_angle expects a 3-vector, got " + shape_str(axis_angle.shape()));
    Vec3 v{axis_angle.at(0), axis_angle.at(1), axis_angle.at(2)};
    Mat3 r = rodrigues(v);
    Tensor out = Tensor::from({3, 3}, std::vector<real>(r.m, r.m + 9));

    Tape* tape = common_tape({&axis_angle});
    if (!tape) return out;
    return tape->record1({axis_angle}, std::move(out), [v](Tape::BackwardCtx& ctx) {
        auto g = ctx.out_adjoint(0);
        if (g.empty() || !ctx.input_on_tape(0)) return;
        auto ga = ctx.input_adjoint(0);

        real theta = v.norm();
        real a, b, da, db;
        rodrigues_coeffs(theta, a, b);
        rodrigues_coeff_derivs(theta, da, db);
        Mat3 k = skew(v);
        Mat3 k2 = k * k;
        // dtheta/dv = v / theta (zero in the limit; da,db vanish there too)
        Vec3 dtheta = theta > 0 ? v * (real(1) / theta) : Vec3{0, 0, 0};

        const Vec3 basis[3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
        for (int j = 0; j < 3; ++j) {
            Mat3 dk = skew(basis[j]);
            Mat3 dka = dk * k;
            Mat3 dkb = k * dk;
            Mat3 dk2;
            for (int i = 0; i < 9; ++i) dk2.m[i] = dka.m[i] + dkb.m[i];
            real dt = j == 0 ? dtheta.x : (j == 1 ? dtheta.y : dtheta.z);
            real acc = 0;
            for (int i = 0; i < 9; ++i) {
                real dr = da * dt * k.m[i] + a * dk.m[i] + db * dt * k2.m[i] + b * dk2.m[i];
                acc += g[i] * dr;
            }
            ga[j] += acc;
        }
    });
}

Vec2 project_point(const Camera& cam, const Vec3& world, real& depth, bool& valid) {
    Vec3 pc = cam.rotation * world + cam.translation;
    depth = pc.z;
    valid = pc.z > real(1e-6);
    if (!valid) return {0, 0};
    const Mat3& k = cam.intrinsics;
    return {(k(0, 0) * pc.x + k(0, 1) * pc.y) / pc.z + k(0, 2),
            (k(1, 1) * pc.y) / pc.z + k(1, 2)};
}

Vec3 backproject(const Camera& cam, const Vec2& pixel, real depth) {
    check(depth > 0, "backproject requires depth > 0, got " + std::to_string(depth));
    const Mat3& k = cam.intrinsics;
    real y = (pixel.y - k(1, 2)) / k(1, 1) * depth;
    real x = ((pixel.x - k(0, 2)) * depth - k(0, 1) * y) / k(0, 0);
    Vec3 pc{x, y, depth};
    return cam.rotation.transposed() * (pc - cam.translation);
}

ProjectResult project(const Camera& cam, const Tensor& points) {
    check(points.defined() && points.rank() == 2 && points.dim(1) == 3,
          "project expects points of shape (n,3), got " + shape_str(points.shape()));
    int64_t n = points.dim(0);
    Tensor pixels = Tensor::zeros({n, 2});
    Tensor depths = Tensor::zeros({n});
    Tensor valid = Tensor::zeros({n});
    const real* p = points.data();
    for (int64_t i = 0; i < n; ++i) {
        Vec3 w{p[3 * i], p[3 * i + 1], p[3 * i + 2]};
        real depth;
        bool ok;
        Vec2 px = project_point(cam, w, depth, ok);
        pixels.data()[2 * i] = px.x;
        pixels.data()[2 * i + 1] = px.y;
        depths.data()[i] = ok ? depth : 0;
        valid.data()[i] = ok ? 1 : 0;
    }

    Tape* tape = common_tape({&points});
    ProjectResult result{std::move(pixels), std::move(depths), std::move(valid)};
    if (!tape) return result;

    Tensor saved = points.detached();
    Tensor* outs[] = {&result.pixels, &result.depths};
    Camera camera = cam;
    tape->record({points}, outs, [saved, camera, n](Tape::BackwardCtx& ctx) {
        if (!ctx.input_on_tape(0)) return;
        auto gpix = ctx.out_adjoint(0);
        auto gdep = ctx.out_adjoint(1);
        if (gpix.empty() && gdep.empty()) return;
        auto gp = ctx.input_adjoint(0);
        const real* p = saved.data();
        const Mat3& k = camera.intrinsics;
        const Mat3& r = camera.rotation;
        for (int64_t i = 0; i < n; ++i) {
            Vec3 w{p[3 * i], p[3 * i + 1], p[3 * i + 2]};
            Vec3 pc = r * w + camera.translation;
            if (!(pc.z > real(1e-6))) continue;
            Vec3 gcam{0, 0, 0};
            if (!gpix.empty()) {
                real gu = gpix[2 * i];
                real gv = gpix[2 * i + 1];
                real inv_z = 1 / pc.z;
                gcam.x += gu * k(0, 0) * inv_z;
                gcam.y += gu * k(0, 1) * inv_z + gv * k(1, 1) * inv_z;
                gcam.z += -(gu * (k(0, 0) * pc.x + k(0, 1) * pc.y) + gv * k(1, 1) * pc.y) * inv_z * inv_z;
            }
            if (!gdep.empty()) gcam.z += gdep[i];
            Vec3 gw = r.transposed() * gcam;
            gp[3 * i] += gw.x;
            gp[3 * i + 1] += gw.y;
            gp[3 * i + 2] += gw.z;
        }
    });
    return result;
}

Camera camera_from_angles(real azimuth_rad, real elevation_rad, const CameraConfig& config) {
    check(config.radius > 0, "camera radius must be positive");
    Vec3 pos{config.radius * std::cos(elevation_rad) * std::cos(azimuth_rad),
             config.radius * std::cos(elevation_rad) * std::sin(azimuth_rad),
             config.radius * std::sin(elevation_rad)};
    Vec3 forward = (pos * real(-1)).normalized();  // look at the origin
    Vec3 up{0, 0, 1};
    Vec3 xc = forward.cross(up);
    if (xc.norm() < real(1e-8)) {
        // view axis aligned with up: deterministic tilt of the up vector
        up = Vec3{real(1e-3), 0, 1}.normalized();
        xc = forward.cross(up);
    }
    xc = xc.normalized();
    Vec3 yc = forward.cross(xc);  // image y points down

    Camera cam;
    cam.width = config.width;
    cam.height = config.height;
    cam.intrinsics = Mat3::identity();
    cam.intrinsics(0, 0) = config.focal_px;
    cam.intrinsics(1, 1) = config.focal_px;
    cam.intrinsics(0, 2) = real(config.width - 1) / 2;
    cam.intrinsics(1, 2) = real(config.height - 1) / 2;
    cam.rotation(0, 0) = xc.x;
    cam.rotation(0, 1) = xc.y;
    cam.rotation(0, 2) = xc.z;
    cam.rotation(1, 0) = yc.x;
    cam.rotation(1, 1) = yc.y;
    cam.rotation(1, 2) = yc.z;
    cam.rotation(2, 0) = forward.x;
    cam.rotation(2, 1) = forward.y;
    cam.rotation(2, 2) = forward.z;
    cam.translation = cam.rotation * (pos * real(-1));
    return cam;
}

Camera sample_camera(Rng& rng, const CameraConfig& config) {
    constexpr real kDegToRad = real(3.14159265358979323846 / 180.0);
    real azimuth = rng.uniform(0, real(2 * 3.14159265358979323846));
    real elevation = rng.uniform(config.elev_min_deg * kDegToRad, config.elev_max_deg * kDegToRad);
    return camera_from_angles(azimuth, elevation, config);
}

}  // namespace primcomp::geom
