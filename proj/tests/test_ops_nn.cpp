#include <gtest/gtest.h>

#include "primcomp/gradcheck.hpp"
#include "primcomp/ops.hpp"
#include "primcomp/rng.hpp"

using namespace primcomp;
namespace op = primcomp::ops;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, real lo = -1, real hi = 1) {
    Tensor t = Tensor::zeros(std::move(shape));
    for (int64_t i = 0; i < t.size(); ++i) t.data()[i] = rng.uniform(lo, hi);
    return t;
}

}  // namespace

TEST(Conv2d, OneByOneIdentity) {
    Rng rng(5);
    Tensor img = random_tensor({1, 4, 4}, rng);
    Tensor kernel = Tensor::from({1, 1, 1, 1}, {1});
    Tensor out = op::conv2d(img, kernel, 1, 0);
    ASSERT_EQ(out.shape(), img.shape());
    for (int64_t i = 0; i < img.size(); ++i) EXPECT_DOUBLE_EQ(out.at(i), img.at(i));
}

TEST(Conv2d, AveragingKernelOnConstantImage) {
    const real c = 0.37;
    Tensor img = Tensor::full({1, 6, 6}, c);
    Tensor kernel = Tensor::full({1, 1, 3, 3}, real(1.0 / 9.0));
    Tensor out = op::conv2d(img, kernel, 1, 1);
    // interior equals c, zero-padded borders attenuate
    for (int64_t y = 1; y < 5; ++y) {
        for (int64_t x = 1; x < 5; ++x) EXPECT_NEAR(out.at(y * 6 + x), c, 1e-12);
    }
    EXPECT_LT(out.at(0), c);
}

TEST(Conv2d, ChannelMismatchRejected) {
    EXPECT_THROW(op::conv2d(Tensor::zeros({3, 4, 4}), Tensor::zeros({2, 4, 3, 3}), 1, 1),
                 std::invalid_argument);
}

TEST(Conv2d, Gradcheck) {
    Rng rng(17);
    std::vector<Tensor> inputs = {random_tensor({3, 8, 8}, rng), random_tensor({4, 3, 3, 3}, rng)};
    auto f = [](Tape&, std::span<const Tensor> in) {
        return op::sum(op::sigmoid(op::conv2d(in[0], in[1], 1, 1)));
    };
    EXPECT_LT(gradcheck(f, inputs).max_rel_error, 1e-4);
}

TEST(Conv2d, StridedGradcheck) {
    Rng rng(18);
    std::vector<Tensor> inputs = {random_tensor({2, 8, 8}, rng), random_tensor({3, 2, 3, 3}, rng)};
    auto f = [](Tape&, std::span<const Tensor> in) {
        return op::sum(op::tanh(op::conv2d(in[0], in[1], 2, 1)));
    };
    EXPECT_LT(gradcheck(f, inputs).max_rel_error, 1e-4);
}

TEST(Conv2dInputGrad, MatchesConvTranspose) {
    // conv2d_input_grad is the linear transpose of conv2d: check
    // <conv(x), y> == <x, convT(y)> for random x, y.
    Rng rng(23);
    Tensor x = random_tensor({2, 8, 8}, rng);
    Tensor k = random_tensor({3, 2, 3, 3}, rng);
    Tensor y = random_tensor({3, 4, 4}, rng);
    Tensor cx = op::conv2d(x, k, 2, 1);
    Tensor cty = op::conv2d_input_grad(k, y, {2, 8, 8}, 2, 1);
    real lhs = 0, rhs = 0;
    for (int64_t i = 0; i < cx.size(); ++i) lhs += cx.at(i) * y.at(i);
    for (int64_t i = 0; i < x.size(); ++i) rhs += x.at(i) * cty.at(i);
    EXPECT_NEAR(lhs, rhs, 1e-9);
}

TEST(Conv2dInputGrad, Gradcheck) {
    Rng rng(29);
    std::vector<Tensor> inputs = {random_tensor({3, 2, 3, 3}, rng), random_tensor({3, 4, 4}, rng)};
    auto f = [](Tape&, std::span<const Tensor> in) {
        return op::sum(op::sigmoid(op::conv2d_input_grad(in[0], in[1], {2, 8, 8}, 2, 1)));
    };
    EXPECT_LT(gradcheck(f, inputs).max_rel_error, 1e-4);
}

TEST(BilinearSample, IntegerGridReproducesImage) {
    Rng rng(31);
    Tensor img = random_tensor({2, 3, 4}, rng);
    Tensor coords = Tensor::zeros({3, 4, 2});
    for (int64_t y = 0; y < 3; ++y) {
        for (int64_t x = 0; x < 4; ++x) {
            coords.data()[(y * 4 + x) * 2] = static_cast<real>(x);
            coords.data()[(y * 4 + x) * 2 + 1] = static_cast<real>(y);
        }
    }
    auto r = op::bilinear_sample(img, coords);
    for (int64_t i = 0; i < img.size(); ++i) EXPECT_DOUBLE_EQ(r.values.at(i), img.at(i));
    for (int64_t i = 0; i < r.mask.size(); ++i) EXPECT_DOUBLE_EQ(r.mask.at(i), 1.0);
}

TEST(BilinearSample, CenterOfTwoByTwo) {
    Tensor img = Tensor::from({1, 2, 2}, {0, 1, 2, 3});
    Tensor coords = Tensor::from({1, 1, 2}, {0.5, 0.5});
    auto r = op::bilinear_sample(img, coords);
    EXPECT_DOUBLE_EQ(r.values.item(), 1.5);
}

TEST(BilinearSample, OutOfBoundsMasked) {
    Tensor img = Tensor::from({1, 2, 2}, {0, 1, 2, 3});
    Tensor coords = Tensor::from({1, 2, 2}, {-0.5, 0.0, 5.0, 1.0});
    auto r = op::bilinear_sample(img, coords);
    EXPECT_DOUBLE_EQ(r.values.at(0), 0.0);
    EXPECT_DOUBLE_EQ(r.values.at(1), 0.0);
    EXPECT_DOUBLE_EQ(r.mask.at(0), 0.0);
    EXPECT_DOUBLE_EQ(r.mask.at(1), 0.0);
}

TEST(BilinearSample, GradcheckWrtCoordsAndImage) {
    Rng rng(37);
    Tensor img = random_tensor({2, 5, 5}, rng);
    Tensor coords = Tensor::zeros({3, 3, 2});
    for (int64_t i = 0; i < 9; ++i) {
        coords.data()[2 * i] = rng.uniform(0.3, 3.7);
        coords.data()[2 * i + 1] = rng.uniform(0.3, 3.7);
    }
    std::vector<Tensor> inputs = {img, coords};
    auto f = [](Tape&, std::span<const Tensor> in) {
        auto r = op::bilinear_sample(in[0], in[1]);
        return op::sum(op::mul(r.values, r.values));
    };
    EXPECT_LT(gradcheck(f, inputs).max_rel_error, 1e-4);
}

TEST(Upsample2Nearest, ForwardAndGradient) {
    Tape tape;
    Tensor x = tape.leaf(Tensor::from({1, 2, 2}, {1, 2, 3, 4}));
    Tensor y = op::upsample2_nearest(x);
    ASSERT_EQ(y.shape(), (Shape{1, 4, 4}));
    EXPECT_DOUBLE_EQ(y.at(0), 1);
    EXPECT_DOUBLE_EQ(y.at(5), 1);
    EXPECT_DOUBLE_EQ(y.at(15), 4);
    GradStore g = tape.backward(op::sum(y));
    Tensor gx = g.grad(x);
    for (int64_t i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(gx.at(i), 4.0);
}

TEST(WherePositive, SelectsAndRoutesGradient) {
    Tape tape;
    Tensor a = tape.leaf(Tensor::from({3}, {1, 2, 3}));
    Tensor b = tape.leaf(Tensor::from({3}, {10, 20, 30}));
    Tensor cond = Tensor::from({3}, {1, -1, 0});
    Tensor y = op::where_positive(cond, a, b);
    EXPECT_DOUBLE_EQ(y.at(0), 1);
    EXPECT_DOUBLE_EQ(y.at(1), 20);
    EXPECT_DOUBLE_EQ(y.at(2), 30);
    GradStore g = tape.backward(op::sum(y));
    EXPECT_DOUBLE_EQ(g.grad(a).at(0), 1);
    EXPECT_DOUBLE_EQ(g.grad(a).at(1), 0);
    EXPECT_DOUBLE_EQ(g.grad(b).at(1), 1);
}

TEST(MaxScalar, FloorGradient) {
    Tape tape;
    Tensor x = tape.leaf(Tensor::from({3}, {0.05, 0.1, 0.4}));
    GradStore g = tape.backward(op::sum(op::max_scalar(x, 0.1)));
    Tensor gx = g.grad(x);
    EXPECT_DOUBLE_EQ(gx.at(0), 0);  // below floor
    EXPECT_DOUBLE_EQ(gx.at(1), 0);  // at floor: subgradient 0
    EXPECT_DOUBLE_EQ(gx.at(2), 1);
}
