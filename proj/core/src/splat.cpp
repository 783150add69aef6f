#include <cmath>

#include "primcomp/projection.hpp"

namespace primcomp::proj {

namespace {

constexpr real kWeightEps = real(1e-8);

struct SplatSaved {
    Tensor pixels, valid, features;
    int height = 0, width = 0;
    real sigma = 1;
    std::vector<real> weight_sum;
    Tensor out;
};

}  // namespace

Tensor splat_points(const Tensor& pixels, const Tensor& valid, const Tensor& features, int height,
                    int width, real sigma_splat) {
    check(pixels.defined() && pixels.rank() == 2 && pixels.dim(1) == 2,
          "splat pixels must be (M,2), got " + shape_str(pixels.shape()));
    check(sigma_splat > 0, "sigma_splat must be positive");
    int64_t m = pixels.dim(0);
    check(features.defined() && features.rank() == 2 && features.dim(0) == m,
          "splat features must be (M,K) matching the points");
    check(valid.defined() && valid.size() == m, "valid flags must match point count");
    int64_t k = features.dim(1);
    int64_t npix = int64_t(height) * width;

    auto saved = std::make_shared<SplatSaved>();
    saved->pixels = pixels.detached();
    saved->valid = valid.detached();
    saved->features = features.detached();
    saved->height = height;
    saved->width = width;
    saved->sigma = sigma_splat;
    saved->weight_sum.assign(npix, 0);

    Tensor out = Tensor::zeros({k, height, width});
    const real* pix = saved->pixels.data();
    const real* feat = saved->features.data();
    const real radius = 3 * sigma_splat;
    const real r2max = radius * radius;
    const real inv_two_sigma2 = real(1) / (2 * sigma_splat * sigma_splat);

    for (int64_t j = 0; j < m; ++j) {
        if (saved->valid.at(j) == 0) continue;
        real cx = pix[2 * j], cy = pix[2 * j + 1];
        int xlo = std::max(0, static_cast<int>(std::ceil(cx - radius)));
        int xhi = std::min(width - 1, static_cast<int>(std::floor(cx + radius)));
        int ylo = std::max(0, static_cast<int>(std::ceil(cy - radius)));
        int yhi = std::min(height - 1, static_cast<int>(std::floor(cy + radius)));
        for (int py = ylo; py <= yhi; ++py) {
            for (int px = xlo; px <= xhi; ++px) {
                real dx = px - cx, dy = py - cy;
                real r2 = dx * dx + dy * dy;
                if (r2 > r2max) continue;  // truncated at 3 sigma
                real w = std::exp(-r2 * inv_two_sigma2);
                int64_t p = int64_t(py) * width + px;
                saved->weight_sum[p] += w;
                for (int64_t c = 0; c < k; ++c) out.data()[c * npix + p] += w * feat[j * k + c];
            }
        }
    }
    for (int64_t p = 0; p < npix; ++p) {
        real denom = saved->weight_sum[p] + kWeightEps;
        for (int64_t c = 0; c < k; ++c) out.data()[c * npix + p] /= denom;
    }
    saved->out = out;

    Tape* tape = common_tape({&pixels, &features});
    if (!tape) return out;
    return tape->record1({pixels, features}, std::move(out), [saved, m, k, npix](Tape::BackwardCtx& ctx) {
        auto g = ctx.out_adjoint(0);
        if (g.empty()) return;
        bool need_pix = ctx.input_on_tape(0);
        bool need_feat = ctx.input_on_tape(1);
        if (!need_pix && !need_feat) return;
        std::span<real> gpix = need_pix ? ctx.input_adjoint(0) : std::span<real>{};
        std::span<real> gfeat = need_feat ? ctx.input_adjoint(1) : std::span<real>{};

        const real* pix = saved->pixels.data();
        const real* feat = saved->features.data();
        const real* out = saved->out.data();
        const real radius = 3 * saved->sigma;
        const real r2max = radius * radius;
        const real inv_sigma2 = real(1) / (saved->sigma * saved->sigma);
        const real inv_two_sigma2 = inv_sigma2 / 2;
        const int width = saved->width, height = saved->height;

        for (int64_t j = 0; j < m; ++j) {
            if (saved->valid.at(j) == 0) continue;
            real cx = pix[2 * j], cy = pix[2 * j + 1];
            int xlo = std::max(0, static_cast<int>(std::ceil(cx - radius)));
            int xhi = std::min(width - 1, static_cast<int>(std::floor(cx + radius)));
            int ylo = std::max(0, static_cast<int>(std::ceil(cy - radius)));
            int yhi = std::min(height - 1, static_cast<int>(std::floor(cy + radius)));
            for (int py = ylo; py <= yhi; ++py) {
                for (int px = xlo; px <= xhi; ++px) {
                    real dx = px - cx, dy = py - cy;
                    real r2 = dx * dx + dy * dy;
                    if (r2 > r2max) continue;
                    real w = std::exp(-r2 * inv_two_sigma2);
                    int64_t p = int64_t(py) * width + px;
                    real denom = saved->weight_sum[p] + kWeightEps;
                    real common = 0;
                    for (int64_t c = 0; c < k; ++c) {
                        real gv = g[c * npix + p];
                        if (gv == 0) continue;
                        real fj = feat[j * k + c];
                        common += gv * (fj - out[c * npix + p]) / denom;
                        if (need_feat) gfeat[j * k + c] += gv * w / denom;
                    }
                    if (need_pix && common != 0) {
                        gpix[2 * j] += common * w * dx * inv_sigma2;
                        gpix[2 * j + 1] += common * w * dy * inv_sigma2;
                    }
                }
            }
        }
    });
}

}  // namespace primcomp::proj
