#include <cmath>

#include "primcomp/projection.hpp"

namespace primcomp::proj {

namespace {

constexpr real kEpsAgg = real(1e-12);    // background blend weight floor
constexpr real kSaturated = real(1e-30); // 1-w below this counts as opaque
constexpr real kMinArea2 = real(1e-12);

inline real stable_sigmoid(real x) {
    if (x >= 0) return real(1) / (real(1) + std::exp(-x));
    real e = std::exp(x);
    return e / (real(1) + e);
}

// Exact 2-D point/triangle geometry: squared distance to the triangle
// boundary, inside/outside sign, barycentrics (affine inside, clamped to the
// closest boundary point outside), and their derivatives wrt the six vertex
// coordinates. sign * d2 is C^1 across the boundary since grad(d^2) vanishes
// at d = 0.
struct TriEval {
    real d2 = 0;
    real sign = -1;
    real b[3] = {0, 0, 0};
    real dd2[6] = {0, 0, 0, 0, 0, 0};
    real db[3][6] = {{0}};
};

void eval_triangle(const real* vx, const real* vy, real px, real py, bool need_derivs,
                   TriEval& out) {
    // edge cross products c_i = cross(p_{i+2} - p_{i+1}, p - p_{i+1})
    real c[3];
    real dc[3][6] = {{0}};
    for (int i = 0; i < 3; ++i) {
        int a = (i + 1) % 3, bidx = (i + 2) % 3;
        real ux = vx[bidx] - vx[a], uy = vy[bidx] - vy[a];
        real wx = px - vx[a], wy = py - vy[a];
        c[i] = ux * wy - uy * wx;
        if (need_derivs) {
            // d cross(u,w)/du = (wy, -wx), /dw = (-uy, ux); u dep: b(+), a(-); w dep: a(-)
            dc[i][2 * bidx] = wy;
            dc[i][2 * bidx + 1] = -wx;
            dc[i][2 * a] = -wy + uy;
            dc[i][2 * a + 1] = wx - ux;
        }
    }
    real s = c[0] + c[1] + c[2];  // signed twice-area
    bool inside = (s > 0) ? (c[0] >= 0 && c[1] >= 0 && c[2] >= 0)
                          : (c[0] <= 0 && c[1] <= 0 && c[2] <= 0);
    out.sign = inside ? real(1) : real(-1);

    // closest boundary point over the three edges
    int best_edge = 0;
    real best_d2 = std::numeric_limits<real>::max();
    real best_t = 0;
    for (int e = 0; e < 3; ++e) {
        int a = e, bidx = (e + 1) % 3;
        real ex = vx[bidx] - vx[a], ey = vy[bidx] - vy[a];
        real len2 = ex * ex + ey * ey;
        real t = 0;
        if (len2 > 0) {
            t = ((px - vx[a]) * ex + (py - vy[a]) * ey) / len2;
            t = std::min(std::max(t, real(0)), real(1));
        }
        real dx = px - (vx[a] + t * ex);
        real dy = py - (vy[a] + t * ey);
        real d2 = dx * dx + dy * dy;
        if (d2 < best_d2) {
            best_d2 = d2;
            best_edge = e;
            best_t = t;
        }
    }
    out.d2 = best_d2;

    int ea = best_edge, eb = (best_edge + 1) % 3;
    real ex = vx[eb] - vx[ea], ey = vy[eb] - vy[ea];
    real len2 = ex * ex + ey * ey;
    real t = best_t;
    real qx = vx[ea] + t * ex, qy = vy[ea] + t * ey;
    real dx = px - qx, dy = py - qy;

    if (need_derivs) {
        // envelope form is exact for clamped t as well
        out.dd2[2 * ea] = -2 * (1 - t) * dx;
        out.dd2[2 * ea + 1] = -2 * (1 - t) * dy;
        out.dd2[2 * eb] += -2 * t * dx;
        out.dd2[2 * eb + 1] += -2 * t * dy;
    }

    if (inside && std::abs(s) > kMinArea2) {
        for (int i = 0; i < 3; ++i) out.b[i] = c[i] / s;
        if (need_derivs) {
            real ds[6];
            for (int k = 0; k < 6; ++k) ds[k] = dc[0][k] + dc[1][k] + dc[2][k];
            for (int i = 0; i < 3; ++i) {
                for (int k = 0; k < 6; ++k) out.db[i][k] = (dc[i][k] - out.b[i] * ds[k]) / s;
            }
        }
    } else {
        out.b[ea] = 1 - t;
        out.b[eb] = t;
        if (need_derivs && t > 0 && t < 1 && len2 > 0) {
            real wx = px - vx[ea], wy = py - vy[ea];
            // dt/da = (-e - w + 2 t e)/len2, dt/db = (w - 2 t e)/len2
            real dt[6] = {0, 0, 0, 0, 0, 0};
            dt[2 * ea] = (-ex - wx + 2 * t * ex) / len2;
            dt[2 * ea + 1] = (-ey - wy + 2 * t * ey) / len2;
            dt[2 * eb] = (wx - 2 * t * ex) / len2;
            dt[2 * eb + 1] = (wy - 2 * t * ey) / len2;
            for (int k = 0; k < 6; ++k) {
                out.db[ea][k] = -dt[k];
                out.db[eb][k] = dt[k];
            }
        }
    }
}

struct TriangleCtx {
    int idx[3];
    int page;
    int xlo, xhi, ylo, yhi;  // inclusive pixel bounds
};

struct RasterSetup {
    std::vector<TriangleCtx> tris;
    real margin;
};

RasterSetup setup_triangles(const prim::CanonicalMesh& mesh, const real* pix, const real* valid,
                            int height, int width, const ProjectionConfig& config) {
    RasterSetup setup;
    double delta = static_cast<double>(config.influence_cutoff);
    setup.margin = static_cast<real>(
        std::sqrt(static_cast<double>(config.sigma_soft) * std::log((1.0 - delta) / delta)));
    for (size_t f = 0; f < mesh.triangles.size(); ++f) {
        const auto& t = mesh.triangles[f];
        if (valid[t[0]] == 0 || valid[t[1]] == 0 || valid[t[2]] == 0) continue;
        real x[3], y[3];
        for (int i = 0; i < 3; ++i) {
            x[i] = pix[2 * t[i]];
            y[i] = pix[2 * t[i] + 1];
        }
        real area2 = (x[1] - x[0]) * (y[2] - y[0]) - (y[1] - y[0]) * (x[2] - x[0]);
        if (std::abs(area2) < kMinArea2) continue;  // degenerate projection
        TriangleCtx ctx;
        ctx.idx[0] = t[0];
        ctx.idx[1] = t[1];
        ctx.idx[2] = t[2];
        ctx.page = mesh.page[f];
        real xmin = std::min({x[0], x[1], x[2]}) - setup.margin;
        real xmax = std::max({x[0], x[1], x[2]}) + setup.margin;
        real ymin = std::min({y[0], y[1], y[2]}) - setup.margin;
        real ymax = std::max({y[0], y[1], y[2]}) + setup.margin;
        ctx.xlo = std::max(0, static_cast<int>(std::ceil(xmin)));
        ctx.xhi = std::min(width - 1, static_cast<int>(std::floor(xmax)));
        ctx.ylo = std::max(0, static_cast<int>(std::ceil(ymin)));
        ctx.yhi = std::min(height - 1, static_cast<int>(std::floor(ymax)));
        if (ctx.xlo > ctx.xhi || ctx.ylo > ctx.yhi) continue;
        setup.tris.push_back(ctx);
    }
    return setup;
}

// Forward context saved for the backward pass.
struct Saved {
    Tensor pixels, depths, valid, texels;
    std::shared_ptr<const prim::CanonicalMesh> mesh;
    prim::TextureDesc texture;
    ProjectionConfig config;
    int height = 0, width = 0;
    bool with_features = false;
    // per-pixel aggregation state (final values)
    std::vector<real> min_depth, weight_sum, prod_unsat;
    std::vector<int32_t> sat_count;
    Tensor out_features, out_sil, out_depth;
};

void raster_backward(const Saved& s, std::span<const real> gfeat, std::span<const real> gsil,
                     std::span<const real> gdep, std::span<real> gpix, std::span<real> gz,
                     std::span<real> gtex) {
    const int h = s.height, w = s.width;
    const int64_t npix = int64_t(h) * w;
    const real sigma = s.config.sigma_soft;
    const real gamma = s.config.gamma_depth;
    const real d_far = s.config.d_far;
    const int channels = s.with_features ? s.texture.channels : 0;
    const real* pix = s.pixels.data();
    const real* dep = s.depths.data();
    const real* tex = s.with_features ? s.texels.data() : nullptr;
    const real* out_feat = s.with_features ? s.out_features.data() : nullptr;
    const real* out_dep = s.out_depth.data();

    RasterSetup setup = setup_triangles(*s.mesh, pix, s.valid.data(), h, w, s.config);
    const real* uvec = nullptr;  // mesh uv accessed through the mesh

    (void)uvec;
    for (const TriangleCtx& ctx : setup.tris) {
        real vx[3], vy[3], vz[3], uu[3], vv[3];
        for (int i = 0; i < 3; ++i) {
            vx[i] = pix[2 * ctx.idx[i]];
            vy[i] = pix[2 * ctx.idx[i] + 1];
            vz[i] = dep[ctx.idx[i]];
            uu[i] = s.mesh->uv[ctx.idx[i]].x;
            vv[i] = s.mesh->uv[ctx.idx[i]].y;
        }
        for (int py = ctx.ylo; py <= ctx.yhi; ++py) {
            for (int px = ctx.xlo; px <= ctx.xhi; ++px) {
                TriEval ev;
                eval_triangle(vx, vy, static_cast<real>(px), static_cast<real>(py), true, ev);
                real wgt = stable_sigmoid(ev.sign * ev.d2 / sigma);
                if (wgt < s.config.influence_cutoff) continue;
                int64_t p = int64_t(py) * w + px;

                real m = s.min_depth[p];
                real eps_t = kEpsAgg * std::exp((m - d_far) / gamma);
                real denom = s.weight_sum[p] + eps_t;
                real d = ev.b[0] * vz[0] + ev.b[1] * vz[1] + ev.b[2] * vz[2];
                real expf = std::exp((m - d) / gamma);
                real om = wgt * expf;

                int64_t texel = 0;
                if (s.with_features) {
                    real u = ev.b[0] * uu[0] + ev.b[1] * uu[1] + ev.b[2] * uu[2];
                    real v = ev.b[0] * vv[0] + ev.b[1] * vv[1] + ev.b[2] * vv[2];
                    texel = s.texture.texel(ctx.page, u, v);
                }

                // dL/d omega_f through the normalized aggregates
                real dl_dom = 0;
                if (!gfeat.empty()) {
                    for (int k = 0; k < channels; ++k) {
                        real gk = gfeat[k * npix + p];
                        if (gk != 0) {
                            dl_dom += gk * (tex[texel * channels + k] - out_feat[k * npix + p]) / denom;
                        }
                    }
                }
                real gd_here = gdep.empty() ? real(0) : gdep[p];
                if (gd_here != 0) dl_dom += gd_here * (d - out_dep[p]) / denom;

                // dL/dw: softmax path plus the silhouette product
                real dl_dw = dl_dom * expf;
                if (!gsil.empty() && gsil[p] != 0) {
                    real prod_others;
                    if (s.sat_count[p] >= 2) {
                        prod_others = 0;
                    } else if (s.sat_count[p] == 1) {
                        prod_others = (real(1) - wgt <= kSaturated) ? s.prod_unsat[p] : real(0);
                    } else {
                        prod_others = s.prod_unsat[p] / (real(1) - wgt);
                    }
                    dl_dw += gsil[p] * prod_others;
                }

                // dL/dd: softmax exponent plus the direct interpolation term
                real dl_dd = -dl_dom * om / gamma + gd_here * om / denom;

                // chain into vertex depths and pixel positions
                real dl_dd2 = dl_dw * wgt * (1 - wgt) * ev.sign / sigma;
                for (int i = 0; i < 3; ++i) {
                    gz[ctx.idx[i]] += dl_dd * ev.b[i];
                }
                for (int i = 0; i < 3; ++i) {
                    real gx = dl_dd2 * ev.dd2[2 * i];
                    real gy = dl_dd2 * ev.dd2[2 * i + 1];
                    for (int j = 0; j < 3; ++j) {
                        real zj = vz[j];
                        gx += dl_dd * zj * ev.db[j][2 * i];
                        gy += dl_dd * zj * ev.db[j][2 * i + 1];
                    }
                    gpix[2 * ctx.idx[i]] += gx;
                    gpix[2 * ctx.idx[i] + 1] += gy;
                }

                if (!gfeat.empty() && !gtex.empty()) {
                    for (int k = 0; k < channels; ++k) {
                        real gk = gfeat[k * npix + p];
                        if (gk != 0) gtex[texel * channels + k] += gk * om / denom;
                    }
                }
            }
        }
    }
}

}  // namespace

SoftRasterOutput rasterize_mesh_soft(const SoftRasterInputs& in, int height, int width,
                                     const ProjectionConfig& config) {
    check(in.mesh != nullptr, "rasterize_mesh_soft requires a mesh");
    check(in.pixels.defined() && in.pixels.rank() == 2 && in.pixels.dim(1) == 2,
          "projected pixels must be (V,2), got " + shape_str(in.pixels.shape()));
    const int64_t nverts = in.pixels.dim(0);
    check(in.depths.defined() && in.depths.size() == nverts, "depths must match vertex count");
    check(in.valid.defined() && in.valid.size() == nverts, "valid flags must match vertex count");
    check(static_cast<int64_t>(in.mesh->vertices.size()) == nverts,
          "mesh vertex count does not match projected vertices");
    check(config.sigma_soft > 0 && config.gamma_depth > 0,
          "rasterize_mesh_soft requires sigma_soft > 0 and gamma_depth > 0");
    const bool with_features = in.texels.defined();
    if (with_features) {
        check(in.texels.rank() == 2 && in.texels.dim(0) == in.texture.count() &&
                  in.texels.dim(1) == in.texture.channels,
              "texels shape " + shape_str(in.texels.shape()) + " does not match texture layout");
    }

    auto saved = std::make_shared<Saved>();
    saved->pixels = in.pixels.detached();
    saved->depths = in.depths.detached();
    saved->valid = in.valid.detached();
    saved->mesh = in.mesh;
    saved->texture = in.texture;
    saved->config = config;
    saved->height = height;
    saved->width = width;
    saved->with_features = with_features;
    if (with_features) saved->texels = in.texels.detached();

    const int64_t npix = int64_t(height) * width;
    const int channels = with_features ? in.texture.channels : 0;
    saved->min_depth.assign(npix, config.d_far);
    saved->weight_sum.assign(npix, 0);
    saved->prod_unsat.assign(npix, 1);
    saved->sat_count.assign(npix, 0);
    std::vector<real> weighted_depth(npix, 0);
    std::vector<real> weighted_feat(static_cast<size_t>(channels) * npix, 0);

    const real* pix = saved->pixels.data();
    const real* dep = saved->depths.data();
    const real* tex = with_features ? saved->texels.data() : nullptr;
    const real gamma = config.gamma_depth;

    RasterSetup setup = setup_triangles(*in.mesh, pix, saved->valid.data(), height, width, config);
    for (const TriangleCtx& ctx : setup.tris) {
        real vx[3], vy[3], vz[3], uu[3], vv[3];
        for (int i = 0; i < 3; ++i) {
            vx[i] = pix[2 * ctx.idx[i]];
            vy[i] = pix[2 * ctx.idx[i] + 1];
            vz[i] = dep[ctx.idx[i]];
            uu[i] = in.mesh->uv[ctx.idx[i]].x;
            vv[i] = in.mesh->uv[ctx.idx[i]].y;
        }
        for (int py = ctx.ylo; py <= ctx.yhi; ++py) {
            for (int px = ctx.xlo; px <= ctx.xhi; ++px) {
                TriEval ev;
                eval_triangle(vx, vy, static_cast<real>(px), static_cast<real>(py), false, ev);
                real wgt = stable_sigmoid(ev.sign * ev.d2 / config.sigma_soft);
                if (wgt < config.influence_cutoff) continue;
                int64_t p = int64_t(py) * width + px;

                if (real(1) - wgt <= kSaturated) {
                    saved->sat_count[p]++;
                } else {
                    saved->prod_unsat[p] *= real(1) - wgt;
                }

                real d = ev.b[0] * vz[0] + ev.b[1] * vz[1] + ev.b[2] * vz[2];
                real& m = saved->min_depth[p];
                if (d < m) {
                    // re-anchor the running softmax to the new minimum depth
                    real rescale = std::exp((d - m) / gamma);
                    saved->weight_sum[p] *= rescale;
                    weighted_depth[p] *= rescale;
                    for (int k = 0; k < channels; ++k) weighted_feat[k * npix + p] *= rescale;
                    m = d;
                }
                real om = wgt * std::exp((m - d) / gamma);
                saved->weight_sum[p] += om;
                weighted_depth[p] += om * d;
                if (with_features) {
                    real u = ev.b[0] * uu[0] + ev.b[1] * uu[1] + ev.b[2] * uu[2];
                    real v = ev.b[0] * vv[0] + ev.b[1] * vv[1] + ev.b[2] * vv[2];
                    int64_t texel = in.texture.texel(ctx.page, u, v);
                    for (int k = 0; k < channels; ++k) {
                        weighted_feat[k * npix + p] += om * tex[texel * channels + k];
                    }
                }
            }
        }
    }

    Tensor sil = Tensor::zeros({height, width});
    Tensor depth_img = Tensor::zeros({height, width});
    Tensor feat_img = with_features ? Tensor::zeros({channels, height, width}) : Tensor{};
    for (int64_t p = 0; p < npix; ++p) {
        real prod = saved->sat_count[p] > 0 ? real(0) : saved->prod_unsat[p];
        sil.data()[p] = real(1) - prod;
        real eps_t = kEpsAgg * std::exp((saved->min_depth[p] - config.d_far) / gamma);
        real denom = saved->weight_sum[p] + eps_t;
        depth_img.data()[p] = (weighted_depth[p] + eps_t * config.d_far) / denom;
        for (int k = 0; k < channels; ++k) {
            feat_img.data()[k * npix + p] = weighted_feat[k * npix + p] / denom;
        }
    }

    saved->out_sil = sil;
    saved->out_depth = depth_img;
    if (with_features) saved->out_features = feat_img;

    SoftRasterOutput out;
    out.silhouette = std::move(sil);
    out.depth = std::move(depth_img);
    out.features = std::move(feat_img);

    Tape* tape = with_features ? common_tape({&in.pixels, &in.depths, &in.texels})
                               : common_tape({&in.pixels, &in.depths});
    if (!tape) return out;

    if (with_features) {
        Tensor* outs[] = {&out.features, &out.silhouette, &out.depth};
        tape->record({in.pixels, in.depths, in.texels}, outs, [saved](Tape::BackwardCtx& ctx) {
            auto gfeat = ctx.out_adjoint(0);
            auto gsil = ctx.out_adjoint(1);
            auto gdep = ctx.out_adjoint(2);
            if (gfeat.empty() && gsil.empty() && gdep.empty()) return;
            std::vector<real> zero_pix, zero_z, zero_tex;
            std::span<real> gpix = ctx.input_on_tape(0) ? ctx.input_adjoint(0) : std::span<real>{};
            std::span<real> gz = ctx.input_on_tape(1) ? ctx.input_adjoint(1) : std::span<real>{};
            std::span<real> gtex = ctx.input_on_tape(2) ? ctx.input_adjoint(2) : std::span<real>{};
            if (gpix.empty()) {
                zero_pix.assign(static_cast<size_t>(saved->pixels.size()), 0);
                gpix = zero_pix;
            }
            if (gz.empty()) {
                zero_z.assign(static_cast<size_t>(saved->depths.size()), 0);
                gz = zero_z;
            }
            if (gtex.empty()) {
                zero_tex.assign(static_cast<size_t>(saved->texels.size()), 0);
                gtex = zero_tex;
            }
            raster_backward(*saved, gfeat, gsil, gdep, gpix, gz, gtex);
        });
    } else {
        Tensor* outs[] = {&out.silhouette, &out.depth};
        tape->record({in.pixels, in.depths}, outs, [saved](Tape::BackwardCtx& ctx) {
            auto gsil = ctx.out_adjoint(0);
            auto gdep = ctx.out_adjoint(1);
            if (gsil.empty() && gdep.empty()) return;
            std::vector<real> zero_pix, zero_z;
            std::span<real> gpix = ctx.input_on_tape(0) ? ctx.input_adjoint(0) : std::span<real>{};
            std::span<real> gz = ctx.input_on_tape(1) ? ctx.input_adjoint(1) : std::span<real>{};
            if (gpix.empty()) {
                zero_pix.assign(static_cast<size_t>(saved->pixels.size()), 0);
                gpix = zero_pix;
            }
            if (gz.empty()) {
                zero_z.assign(static_cast<size_t>(saved->depths.size()), 0);
                gz = zero_z;
            }
            raster_backward(*saved, {}, gsil, gdep, gpix, gz, {});
        });
    }
    return out;
}

}  // namespace primcomp::proj
