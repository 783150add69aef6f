#include "primcomp/ops.hpp"

namespace primcomp::ops {

namespace {

// Valid output index range [lo, hi) such that o*stride + kd - pad lands
// inside [0, in_extent).
inline void valid_range(int64_t kd, int64_t pad, int64_t stride, int64_t in_extent,
                        int64_t out_extent, int64_t& lo, int64_t& hi) {
    int64_t first = pad - kd;
    lo = first > 0 ? (first + stride - 1) / stride : 0;
    int64_t last = in_extent - 1 - kd + pad;
    hi = last < 0 ? 0 : std::min(out_extent, last / stride + 1);
    if (hi < lo) hi = lo;
}

struct ConvDims {
    int64_t C, H, W, O, K, Ho, Wo;
    int64_t stride, pad;
};

void conv_fwd(const real* __restrict in, const real* __restrict w, real* __restrict out,
              const ConvDims& d) {
    for (int64_t o = 0; o < d.O; ++o) {
        for (int64_t c = 0; c < d.C; ++c) {
            for (int64_t ky = 0; ky < d.K; ++ky) {
                int64_t ylo, yhi;
                valid_range(ky, d.pad, d.stride, d.H, d.Ho, ylo, yhi);
                for (int64_t kx = 0; kx < d.K; ++kx) {
                    int64_t xlo, xhi;
                    valid_range(kx, d.pad, d.stride, d.W, d.Wo, xlo, xhi);
                    real wv = w[((o * d.C + c) * d.K + ky) * d.K + kx];
                    if (wv == 0) continue;
                    for (int64_t oy = ylo; oy < yhi; ++oy) {
                        const real* inrow = in + (c * d.H + oy * d.stride + ky - d.pad) * d.W + kx - d.pad;
                        real* outrow = out + (o * d.Ho + oy) * d.Wo;
                        if (d.stride == 1) {
                            for (int64_t ox = xlo; ox < xhi; ++ox) outrow[ox] += wv * inrow[ox];
                        } else {
                            for (int64_t ox = xlo; ox < xhi; ++ox) outrow[ox] += wv * inrow[ox * d.stride];
                        }
                    }
                }
            }
        }
    }
}

void conv_dinput(const real* __restrict g, const real* __restrict w, real* __restrict din,
                 const ConvDims& d) {
    for (int64_t o = 0; o < d.O; ++o) {
        for (int64_t c = 0; c < d.C; ++c) {
            for (int64_t ky = 0; ky < d.K; ++ky) {
                int64_t ylo, yhi;
                valid_range(ky, d.pad, d.stride, d.H, d.Ho, ylo, yhi);
                for (int64_t kx = 0; kx < d.K; ++kx) {
                    int64_t xlo, xhi;
                    valid_range(kx, d.pad, d.stride, d.W, d.Wo, xlo, xhi);
                    real wv = w[((o * d.C + c) * d.K + ky) * d.K + kx];
                    if (wv == 0) continue;
                    for (int64_t oy = ylo; oy < yhi; ++oy) {
                        const real* grow = g + (o * d.Ho + oy) * d.Wo;
                        real* dinrow = din + (c * d.H + oy * d.stride + ky - d.pad) * d.W + kx - d.pad;
                        if (d.stride == 1) {
                            for (int64_t ox = xlo; ox < xhi; ++ox) dinrow[ox] += wv * grow[ox];
                        } else {
                            for (int64_t ox = xlo; ox < xhi; ++ox) dinrow[ox * d.stride] += wv * grow[ox];
                        }
                    }
                }
            }
        }
    }
}

void conv_dkernel(const real* __restrict in, const real* __restrict g, real* __restrict dw,
                  const ConvDims& d) {
    for (int64_t o = 0; o < d.O; ++o) {
        for (int64_t c = 0; c < d.C; ++c) {
            for (int64_t ky = 0; ky < d.K; ++ky) {
                int64_t ylo, yhi;
                valid_range(ky, d.pad, d.stride, d.H, d.Ho, ylo, yhi);
                for (int64_t kx = 0; kx < d.K; ++kx) {
                    int64_t xlo, xhi;
                    valid_range(kx, d.pad, d.stride, d.W, d.Wo, xlo, xhi);
                    real acc = 0;
                    for (int64_t oy = ylo; oy < yhi; ++oy) {
                        const real* grow = g + (o * d.Ho + oy) * d.Wo;
                        const real* inrow = in + (c * d.H + oy * d.stride + ky - d.pad) * d.W + kx - d.pad;
                        if (d.stride == 1) {
                            for (int64_t ox = xlo; ox < xhi; ++ox) acc += grow[ox] * inrow[ox];
                        } else {
                            for (int64_t ox = xlo; ox < xhi; ++ox) acc += grow[ox] * inrow[ox * d.stride];
                        }
                    }
                    dw[((o * d.C + c) * d.K + ky) * d.K + kx] += acc;
                }
            }
        }
    }
}

ConvDims make_dims(const Shape& input, const Shape& kernel, int stride, int pad) {
    check(input.size() == 3, "conv2d input must be (C,H,W), got " + shape_str(input));
    check(kernel.size() == 4, "conv2d kernel must be (O,C,k,k), got " + shape_str(kernel));
    check(kernel[2] == kernel[3], "conv2d kernel must be square, got " + shape_str(kernel));
    check(kernel[2] % 2 == 1, "conv2d kernel size must be odd, got " + std::to_string(kernel[2]));
    check(kernel[1] == input[0], "conv2d channel mismatch: input " + shape_str(input) +
                                     " vs kernel " + shape_str(kernel));
    check(stride >= 1 && pad >= 0, "conv2d requires stride >= 1 and pad >= 0");
    ConvDims d;
    d.C = input[0];
    d.H = input[1];
    d.W = input[2];
    d.O = kernel[0];
    d.K = kernel[2];
    d.stride = stride;
    d.pad = pad;
    d.Ho = (d.H + 2 * pad - d.K) / stride + 1;
    d.Wo = (d.W + 2 * pad - d.K) / stride + 1;
    check(d.Ho > 0 && d.Wo > 0, "conv2d output would be empty for input " + shape_str(input));
    return d;
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& kernel, int stride, int pad) {
    ConvDims d = make_dims(input.shape(), kernel.shape(), stride, pad);
    Tensor out = Tensor::zeros({d.O, d.Ho, d.Wo});
    conv_fwd(input.data(), kernel.data(), out.data(), d);

    Tape* tape = common_tape({&input, &kernel});
    if (!tape) return out;
    Tensor sin = input.detached(), sker = kernel.detached();
    return tape->record1({input, kernel}, std::move(out), [sin, sker, d](Tape::BackwardCtx& ctx) {
        auto g = ctx.out_adjoint(0);
        if (g.empty()) return;
        if (ctx.input_on_tape(0)) {
            conv_dinput(g.data(), sker.data(), ctx.input_adjoint(0).data(), d);
        }
        if (ctx.input_on_tape(1)) {
            conv_dkernel(sin.data(), g.data(), ctx.input_adjoint(1).data(), d);
        }
    });
}

Tensor conv2d_input_grad(const Tensor& kernel, const Tensor& grad_out, Shape input_shape,
                         int stride, int pad) {
    ConvDims d = make_dims(input_shape, kernel.shape(), stride, pad);
    check(grad_out.rank() == 3 && grad_out.dim(0) == d.O && grad_out.dim(1) == d.Ho &&
              grad_out.dim(2) == d.Wo,
          "conv2d_input_grad grad_out shape " + shape_str(grad_out.shape()) +
              " does not match conv output (" + std::to_string(d.O) + ", " +
              std::to_string(d.Ho) + ", " + std::to_string(d.Wo) + ")");
    Tensor out = Tensor::zeros(input_shape);
    conv_dinput(grad_out.data(), kernel.data(), out.data(), d);

    Tape* tape = common_tape({&kernel, &grad_out});
    if (!tape) return out;
    Tensor sker = kernel.detached(), sg = grad_out.detached();
    return tape->record1({kernel, grad_out}, std::move(out), [sker, sg, d](Tape::BackwardCtx& ctx) {
        auto g = ctx.out_adjoint(0);  // input-shaped
        if (g.empty()) return;
        if (ctx.input_on_tape(0)) {
            // d/dkernel of (grad_out conv^T kernel): correlate g with grad_out
            conv_dkernel(g.data(), sg.data(), ctx.input_adjoint(0).data(), d);
        }
        if (ctx.input_on_tape(1)) {
            // transpose of the transpose: a plain forward convolution
            conv_fwd(g.data(), sker.data(), ctx.input_adjoint(1).data(), d);
        }
    });
}

}  // namespace primcomp::ops
