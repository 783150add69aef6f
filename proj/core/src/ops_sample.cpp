#include <cmath>

#include "primcomp/ops.hpp"

namespace primcomp::ops {

SampleResult bilinear_sample(const Tensor& image, const Tensor& coords) {
    check(image.defined() && image.rank() == 3,
          "bilinear_sample image must be (C,H,W), got " + shape_str(image.shape()));
    check(coords.defined() && coords.rank() == 3 && coords.dim(2) == 2,
          "bilinear_sample coords must be (H',W',2), got " + shape_str(coords.shape()));
    int64_t C = image.dim(0), H = image.dim(1), W = image.dim(2);
    int64_t Ho = coords.dim(0), Wo = coords.dim(1);
    check(H >= 2 && W >= 2, "bilinear_sample needs at least a 2x2 image");

    Tensor values = Tensor::zeros({C, Ho, Wo});
    Tensor mask = Tensor::zeros({Ho, Wo});
    const real* img = image.data();
    const real* crd = coords.data();
    real* val = values.data();
    real* msk = mask.data();

    int64_t npix = Ho * Wo;
    for (int64_t p = 0; p < npix; ++p) {
        real x = crd[2 * p];
        real y = crd[2 * p + 1];
        if (!(x >= 0 && x <= real(W - 1) && y >= 0 && y <= real(H - 1))) continue;
        msk[p] = 1;
        int64_t x0 = std::min(static_cast<int64_t>(std::floor(x)), W - 2);
        int64_t y0 = std::min(static_cast<int64_t>(std::floor(y)), H - 2);
        real fx = x - static_cast<real>(x0);
        real fy = y - static_cast<real>(y0);
        real w00 = (1 - fx) * (1 - fy), w01 = fx * (1 - fy);
        real w10 = (1 - fx) * fy, w11 = fx * fy;
        for (int64_t c = 0; c < C; ++c) {
            const real* plane = img + c * H * W;
            val[c * npix + p] = w00 * plane[y0 * W + x0] + w01 * plane[y0 * W + x0 + 1] +
                                w10 * plane[(y0 + 1) * W + x0] + w11 * plane[(y0 + 1) * W + x0 + 1];
        }
    }

    Tape* tape = common_tape({&image, &coords});
    SampleResult result{std::move(values), std::move(mask)};
    if (!tape) return result;

    Tensor simg = image.detached(), scrd = coords.detached();
    result.values = tape->record1(
        {image, coords}, std::move(result.values),
        [simg, scrd, C, H, W, Ho, Wo](Tape::BackwardCtx& ctx) {
            auto g = ctx.out_adjoint(0);
            if (g.empty()) return;
            const real* img = simg.data();
            const real* crd = scrd.data();
            bool need_img = ctx.input_on_tape(0);
            bool need_crd = ctx.input_on_tape(1);
            std::span<real> gi = need_img ? ctx.input_adjoint(0) : std::span<real>{};
            std::span<real> gc = need_crd ? ctx.input_adjoint(1) : std::span<real>{};
            int64_t npix = Ho * Wo;
            for (int64_t p = 0; p < npix; ++p) {
                real x = crd[2 * p];
                real y = crd[2 * p + 1];
                if (!(x >= 0 && x <= real(W - 1) && y >= 0 && y <= real(H - 1))) continue;
                int64_t x0 = std::min(static_cast<int64_t>(std::floor(x)), W - 2);
                int64_t y0 = std::min(static_cast<int64_t>(std::floor(y)), H - 2);
                real fx = x - static_cast<real>(x0);
                real fy = y - static_cast<real>(y0);
                for (int64_t c = 0; c < C; ++c) {
                    real gv = g[c * npix + p];
                    if (gv == 0) continue;
                    const real* plane = img + c * H * W;
                    real v00 = plane[y0 * W + x0], v01 = plane[y0 * W + x0 + 1];
                    real v10 = plane[(y0 + 1) * W + x0], v11 = plane[(y0 + 1) * W + x0 + 1];
                    if (need_img) {
                        real* gplane = gi.data() + c * H * W;
                        gplane[y0 * W + x0] += gv * (1 - fx) * (1 - fy);
                        gplane[y0 * W + x0 + 1] += gv * fx * (1 - fy);
                        gplane[(y0 + 1) * W + x0] += gv * (1 - fx) * fy;
                        gplane[(y0 + 1) * W + x0 + 1] += gv * fx * fy;
                    }
                    if (need_crd) {
                        real dvdx = (1 - fy) * (v01 - v00) + fy * (v11 - v10);
                        real dvdy = (1 - fx) * (v10 - v00) + fx * (v11 - v01);
                        gc[2 * p] += gv * dvdx;
                        gc[2 * p + 1] += gv * dvdy;
                    }
                }
            }
        });
    return result;
}

Tensor upsample2_nearest(const Tensor& a) {
    check(a.defined() && a.rank() == 3, "upsample2_nearest expects (C,H,W), got " + shape_str(a.shape()));
    int64_t C = a.dim(0), H = a.dim(1), W = a.dim(2);
    Tensor out = Tensor::zeros({C, 2 * H, 2 * W});
    const real* pa = a.data();
    real* po = out.data();
    for (int64_t c = 0; c < C; ++c) {
        for (int64_t y = 0; y < H; ++y) {
            const real* row = pa + (c * H + y) * W;
            real* out0 = po + (c * 2 * H + 2 * y) * 2 * W;
            real* out1 = out0 + 2 * W;
            for (int64_t x = 0; x < W; ++x) {
                out0[2 * x] = out0[2 * x + 1] = row[x];
                out1[2 * x] = out1[2 * x + 1] = row[x];
            }
        }
    }
    Tape* tape = common_tape({&a});
    if (!tape) return out;
    return tape->record1({a}, std::move(out), [C, H, W](Tape::BackwardCtx& ctx) {
        auto g = ctx.out_adjoint(0);
        if (g.empty() || !ctx.input_on_tape(0)) return;
        auto ga = ctx.input_adjoint(0);
        for (int64_t c = 0; c < C; ++c) {
            for (int64_t y = 0; y < H; ++y) {
                real* garow = ga.data() + (c * H + y) * W;
                const real* g0 = g.data() + (c * 2 * H + 2 * y) * 2 * W;
                const real* g1 = g0 + 2 * W;
                for (int64_t x = 0; x < W; ++x) {
                    garow[x] += g0[2 * x] + g0[2 * x + 1] + g1[2 * x] + g1[2 * x + 1];
                }
            }
        }
    });
}

}  // namespace primcomp::ops
