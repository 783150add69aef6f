#include "primcomp/warp.hpp"

#include <cmath>

namespace primcomp::geom {

namespace op = primcomp::ops;

namespace {

struct Vec3Maps {
    Tensor x, y, z;
};

// x' = R x + t, componentwise on (H,W) maps
Vec3Maps apply_rigid(const Mat3& r, const Vec3& t, const Vec3Maps& p) {
    auto row = [&](int i) {
        Tensor acc = op::mul_scalar(p.x, r(i, 0));
        acc = op::add(acc, op::mul_scalar(p.y, r(i, 1)));
        acc = op::add(acc, op::mul_scalar(p.z, r(i, 2)));
        real ti = i == 0 ? t.x : (i == 1 ? t.y : t.z);
        return ti == 0 ? acc : op::add_scalar(acc, ti);
    };
    return {row(0), row(1), row(2)};
}

}  // namespace

WarpResult warp_image(const proj::FeatureTriplet& source, const Camera& cam,
                      const RelativeTransform& transform, const Tensor& target_depth,
                      const WarpOptions& options) {
    validate_camera(cam);
    check(source.X.defined() && source.X.rank() == 3, "warp source features must be (F,H,W)");
    check(source.A.defined() && source.A.rank() == 2, "warp source alpha must be (H,W)");
    check(source.D.defined() && source.D.shape() == source.A.shape(),
          "warp source depth must match the alpha map");
    const int64_t h = source.A.dim(0), w = source.A.dim(1);
    check(h == cam.height && w == cam.width, "warp images must match the camera size");
    check(target_depth.defined() && target_depth.shape() == source.A.shape(),
          "target depth must be (H,W)");
    for (int64_t i = 0; i < source.D.size(); ++i) {
        if (source.A.at(i) > 0) {
            check(source.D.at(i) > 0, "warp source depth must be positive where alpha > 0");
        }
    }

    if (transform.is_identity()) {
        return {source, Tensor::full({h, w}, 1)};
    }

    const Mat3& k = cam.intrinsics;
    const Mat3 rct = cam.rotation.transposed();
    const Vec3 origin = cam.center();

    // constant per-pixel ray directions R^T K^-1 (x, y, 1)
    Tensor dir_x = Tensor::zeros({h, w});
    Tensor dir_y = Tensor::zeros({h, w});
    Tensor dir_z = Tensor::zeros({h, w});
    for (int64_t py = 0; py < h; ++py) {
        for (int64_t px = 0; px < w; ++px) {
            real ky = (static_cast<real>(py) - k(1, 2)) / k(1, 1);
            real kx = (static_cast<real>(px) - k(0, 2) - k(0, 1) * ky) / k(0, 0);
            Vec3 d = rct * Vec3{kx, ky, 1};
            dir_x.data()[py * w + px] = d.x;
            dir_y.data()[py * w + px] = d.y;
            dir_z.data()[py * w + px] = d.z;
        }
    }

    // target-frame world points at the predicted depth
    Vec3Maps p_target{op::add_scalar(op::mul(target_depth, dir_x), origin.x),
                      op::add_scalar(op::mul(target_depth, dir_y), origin.y),
                      op::add_scalar(op::mul(target_depth, dir_z), origin.z)};
    // into the source scene and the camera frame
    Vec3Maps p_source = apply_rigid(transform.rotation, transform.translation, p_target);
    Vec3Maps p_cam = apply_rigid(cam.rotation, cam.translation, p_source);

    Tensor z_safe = op::max_scalar(p_cam.z, options.z_clip);
    Tensor u = op::add_scalar(
        op::div(op::add(op::mul_scalar(p_cam.x, k(0, 0)), op::mul_scalar(p_cam.y, k(0, 1))), z_safe),
        k(0, 2));
    Tensor v = op::add_scalar(op::div(op::mul_scalar(p_cam.y, k(1, 1)), z_safe), k(1, 2));
    Tensor coords = op::stack_last2(u, v);

    auto sampled_x = op::bilinear_sample(source.X, coords);
    auto sampled_a = op::bilinear_sample(op::reshape(source.A, {1, h, w}), coords);
    auto sampled_d = op::bilinear_sample(op::reshape(source.D, {1, h, w}), coords);

    // sampled source depth back into target-frame camera depth
    Tensor sdepth = op::reshape(sampled_d.values, {h, w});
    Tensor sky = op::mul_scalar(op::add_scalar(v, -k(1, 2)), real(1) / k(1, 1));
    Tensor skx = op::mul_scalar(op::sub(op::add_scalar(u, -k(0, 2)), op::mul_scalar(sky, k(0, 1))),
                                real(1) / k(0, 0));
    Vec3Maps sdir{
        op::add(op::add(op::mul_scalar(skx, rct(0, 0)), op::mul_scalar(sky, rct(0, 1))),
                Tensor::full({h, w}, rct(0, 2))),
        op::add(op::add(op::mul_scalar(skx, rct(1, 0)), op::mul_scalar(sky, rct(1, 1))),
                Tensor::full({h, w}, rct(1, 2))),
        op::add(op::add(op::mul_scalar(skx, rct(2, 0)), op::mul_scalar(sky, rct(2, 1))),
                Tensor::full({h, w}, rct(2, 2)))};
    Vec3Maps p_src_world{op::add_scalar(op::mul(sdepth, sdir.x), origin.x),
                         op::add_scalar(op::mul(sdepth, sdir.y), origin.y),
                         op::add_scalar(op::mul(sdepth, sdir.z), origin.z)};
    RelativeTransform inv = transform.inverse();
    Vec3Maps p_back = apply_rigid(inv.rotation, inv.translation, p_src_world);
    Vec3Maps p_back_cam = apply_rigid(cam.rotation, cam.translation, p_back);
    Tensor warped_depth = p_back_cam.z;

    // validity: in-bounds sample, point in front of the camera, and the
    // optional depth-consistency test
    Tensor mask = Tensor::zeros({h, w});
    for (int64_t i = 0; i < mask.size(); ++i) {
        bool ok = sampled_x.mask.at(i) > 0 && p_cam.z.at(i) > options.z_clip;
        if (ok && options.occlusion_test) {
            ok = std::abs(warped_depth.at(i) - target_depth.at(i)) <= options.occlusion_threshold;
        }
        mask.data()[i] = ok ? 1 : 0;
    }

    WarpResult result;
    result.triplet.X = sampled_x.values;
    result.triplet.A = op::reshape(sampled_a.values, {h, w});
    result.triplet.D = warped_depth;
    result.mask = std::move(mask);
    return result;
}

WarpResult warp_image(const proj::FeatureTriplet& source, const Camera& cam,
                      const RelativeTransform& transform, const WarpOptions& options) {
    return warp_image(source, cam, transform, source.D.detached(), options);
}

}  // namespace primcomp::geom
