#pragma once

#include <span>

#include "primcomp/tape.hpp"

// Differentiable tensor operations. Binary elementwise ops broadcast under
// trailing-dimension rules (right-aligned, extent-1 expansion); there are no
// implicit reshapes. Every op records its adjoint on the operands' tape.
namespace primcomp::ops {

// --- elementwise ---
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor neg(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor sqrt(const Tensor& a);
Tensor abs(const Tensor& a);  // subgradient sign(0) := 0
Tensor square(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor softplus(const Tensor& a);
Tensor leaky_relu(const Tensor& a, real slope);
Tensor add_scalar(const Tensor& a, real s);
Tensor mul_scalar(const Tensor& a, real s);
// max(a, floor); gradient passes only where a > floor
Tensor max_scalar(const Tensor& a, real floor);
// gradient passes only strictly inside [lo, hi]
Tensor clamp(const Tensor& a, real lo, real hi);
// a where cond > 0 else b; cond receives no gradient
Tensor where_positive(const Tensor& cond, const Tensor& a, const Tensor& b);

// --- shape ---
Tensor reshape(const Tensor& a, Shape shape);
Tensor slice0(const Tensor& a, int64_t begin, int64_t end);
Tensor concat0(std::span<const Tensor> parts);
// (H,W) x 2 -> (H,W,2), last-axis interleave
Tensor stack_last2(const Tensor& a, const Tensor& b);

// --- reductions ---
Tensor sum(const Tensor& a);
Tensor sum(const Tensor& a, std::span<const int64_t> axes);
Tensor mean(const Tensor& a);
Tensor mean(const Tensor& a, std::span<const int64_t> axes);
Tensor l1norm(const Tensor& a);

// --- linear algebra ---
// 2-D matrix product with optional transposes.
Tensor matmul(const Tensor& a, const Tensor& b, bool trans_a = false, bool trans_b = false);

// --- convolution ---
// input (C,H,W), kernel (O,C,k,k), cross-correlation, zero padding.
Tensor conv2d(const Tensor& input, const Tensor& kernel, int stride, int pad);
// Adjoint of conv2d wrt its input, exposed as a first-class differentiable op
// (transposed convolution); needed to express discriminator input gradients
// as tape operations.
Tensor conv2d_input_grad(const Tensor& kernel, const Tensor& grad_out, Shape input_shape,
                         int stride, int pad);

// --- sampling ---
struct SampleResult {
    Tensor values;  // (C,H',W')
    Tensor mask;    // (H',W') detached, 1 where all four neighbours in bounds
};
// coords (H',W',2) as (x,y) in continuous pixel units; integer coordinates
// address pixels exactly. Out-of-bounds samples return 0 with mask 0.
SampleResult bilinear_sample(const Tensor& image, const Tensor& coords);
Tensor upsample2_nearest(const Tensor& a);  // (C,H,W) -> (C,2H,2W)

}  // namespace primcomp::ops
