#include <gtest/gtest.h>

#include <numeric>

#include "primcomp/compositor.hpp"
#include "primcomp/gradcheck.hpp"
#include "primcomp/rng.hpp"

using namespace primcomp;
using namespace primcomp::comp;
namespace op = primcomp::ops;

namespace {

RefinedLayer make_layer(int size, const std::array<real, 3>& color, real alpha, real depth,
                        bool background, int id) {
    RefinedLayer l;
    l.color = Tensor::zeros({3, size, size});
    for (int c = 0; c < 3; ++c) {
        for (int64_t p = 0; p < size * size; ++p) l.color.data()[c * size * size + p] = color[c];
    }
    l.alpha = Tensor::full({size, size}, alpha);
    l.depth = Tensor::full({size, size}, depth);
    l.is_background = background;
    l.id = id;
    return l;
}

std::vector<RefinedLayer> random_scene(int size, int foreground, Rng& rng) {
    std::vector<RefinedLayer> layers;
    for (int i = 0; i < foreground; ++i) {
        RefinedLayer l;
        l.color = Tensor::zeros({3, size, size});
        l.alpha = Tensor::zeros({size, size});
        l.depth = Tensor::zeros({size, size});
        for (int64_t p = 0; p < l.color.size(); ++p) l.color.data()[p] = rng.uniform(0, 1);
        for (int64_t p = 0; p < l.alpha.size(); ++p) l.alpha.data()[p] = rng.uniform(0, 1);
        for (int64_t p = 0; p < l.depth.size(); ++p) l.depth.data()[p] = rng.uniform(1, 10);
        l.id = i;
        layers.push_back(std::move(l));
    }
    RefinedLayer bg = make_layer(size, {0.5, 0.5, 0.5}, 1.0, 15.0, true, foreground);
    for (int64_t p = 0; p < bg.color.size(); ++p) bg.color.data()[p] = rng.uniform(0, 1);
    layers.push_back(std::move(bg));
    return layers;
}

}  // namespace

TEST(Composite, SingleBackgroundIsItsColor) {
    auto bg = make_layer(4, {0.2, 0.4, 0.6}, 1.0, 15.0, true, 0);
    RefinedLayer layers[] = {bg};
    CompositeResult r = composite(layers);
    for (int64_t p = 0; p < 16; ++p) {
        EXPECT_DOUBLE_EQ(r.image.at(p), 0.2);
        EXPECT_DOUBLE_EQ(r.image.at(16 + p), 0.4);
        EXPECT_DOUBLE_EQ(r.image.at(32 + p), 0.6);
    }
}

TEST(Composite, MissingBackgroundRejected) {
    auto fg = make_layer(4, {1, 0, 0}, 0.5, 2.0, false, 0);
    RefinedLayer layers[] = {fg};
    EXPECT_THROW(composite(layers), std::invalid_argument);
}

TEST(Composite, OpaqueForegroundWins) {
    auto fg = make_layer(4, {1, 0, 0}, 1.0, 2.0, false, 0);
    auto bg = make_layer(4, {0, 0, 1}, 1.0, 15.0, true, 1);
    RefinedLayer layers[] = {fg, bg};
    CompositeResult r = composite(layers);
    for (int64_t p = 0; p < 16; ++p) {
        EXPECT_DOUBLE_EQ(r.image.at(p), 1.0);
        EXPECT_DOUBLE_EQ(r.image.at(32 + p), 0.0);
    }
}

TEST(Composite, OverOperator) {
    // front alpha 0.5 red over opaque blue: (0.5, 0, 0.5)
    auto front = make_layer(2, {1, 0, 0}, 0.5, 1.0, false, 0);
    auto back = make_layer(2, {0, 0, 1}, 1.0, 15.0, true, 1);
    RefinedLayer layers[] = {front, back};
    CompositeResult r = composite(layers);
    EXPECT_DOUBLE_EQ(r.image.at(0), 0.5);
    EXPECT_DOUBLE_EQ(r.image.at(4), 0.0);
    EXPECT_DOUBLE_EQ(r.image.at(8), 0.5);
}

TEST(Composite, BackgroundAlphaForcedToOne) {
    auto fg = make_layer(2, {1, 0, 0}, 0.25, 2.0, false, 0);
    auto bg = make_layer(2, {0, 1, 0}, 0.0, 15.0, true, 1);  // network says 0
    RefinedLayer layers[] = {fg, bg};
    CompositeResult r = composite(layers);
    // image stays fully covered: 0.25 red + 0.75 green
    EXPECT_DOUBLE_EQ(r.image.at(0), 0.25);
    EXPECT_DOUBLE_EQ(r.image.at(4), 0.75);
    EXPECT_DOUBLE_EQ(r.instance_weights[1].at(0), 0.75);
}

TEST(Composite, InstanceWeightsSumToOne) {
    Rng rng(139);
    for (int trial = 0; trial < 20; ++trial) {
        auto layers = random_scene(6, 3, rng);
        CompositeResult r = composite(layers);
        for (int64_t p = 0; p < 36; ++p) {
            real total = 0;
            for (const Tensor& w : r.instance_weights) total += w.at(p);
            EXPECT_NEAR(total, 1.0, 1e-12);
        }
    }
}

TEST(Composite, ImageStaysInUnitCube) {
    Rng rng(141);
    for (int trial = 0; trial < 20; ++trial) {
        auto layers = random_scene(5, 3, rng);
        CompositeResult r = composite(layers);
        for (int64_t i = 0; i < r.image.size(); ++i) {
            ASSERT_GE(r.image.at(i), 0.0);
            ASSERT_LE(r.image.at(i), 1.0);
        }
    }
}

TEST(Composite, PermutationInvariance) {
    Rng rng(149);
    for (int trial = 0; trial < 100; ++trial) {
        auto layers = random_scene(4, 3, rng);
        std::vector<size_t> perm(layers.size());
        std::iota(perm.begin(), perm.end(), 0);
        for (size_t i = perm.size(); i > 1; --i) {
            std::swap(perm[i - 1], perm[static_cast<size_t>(rng.uniform_int(static_cast<int64_t>(i)))]);
        }
        EXPECT_TRUE(composite_permutation_check(layers, perm));
    }
}

TEST(Composite, AllForegroundOrderingsAgree) {
    Rng rng(151);
    auto layers = random_scene(5, 3, rng);
    std::vector<size_t> perm = {0, 1, 2, 3};
    std::sort(perm.begin(), perm.begin() + 3);
    do {
        EXPECT_TRUE(composite_permutation_check(layers, perm));
    } while (std::next_permutation(perm.begin(), perm.begin() + 3));
}

TEST(Composite, EqualDepthTieBreaksOnId) {
    auto a = make_layer(2, {1, 0, 0}, 0.5, 3.0, false, 0);
    auto b = make_layer(2, {0, 1, 0}, 0.5, 3.0, false, 1);  // exactly equal depth
    auto bg = make_layer(2, {0, 0, 1}, 1.0, 15.0, true, 2);
    std::vector<RefinedLayer> layers = {a, b, bg};
    std::vector<size_t> swap_first_two = {1, 0, 2};
    EXPECT_TRUE(composite_permutation_check(layers, swap_first_two));
    CompositeResult r = composite(layers);
    // id 0 sits in front: 0.5 red + 0.25 green + 0.25 blue
    EXPECT_DOUBLE_EQ(r.image.at(0), 0.5);
    EXPECT_DOUBLE_EQ(r.image.at(4), 0.25);
    EXPECT_DOUBLE_EQ(r.image.at(8), 0.25);
}

TEST(Composite, SingleLayerPermutationTrivially) {
    auto bg = make_layer(2, {0.3, 0.3, 0.3}, 1.0, 15.0, true, 0);
    RefinedLayer layers[] = {bg};
    size_t perm[] = {0};
    EXPECT_TRUE(composite_permutation_check(layers, perm));
}

TEST(Composite, FrontAlphaMonotonicity) {
    // raising a front layer's alpha never raises any behind-layer's weight
    Rng rng(157);
    auto layers = random_scene(4, 2, rng);
    CompositeResult before = composite(layers);
    // find the front layer at pixel 0
    size_t front = before.instance_weights[0].at(0) > 0 &&
                    layers[0].depth.at(0) < layers[1].depth.at(0) ? 0 : 1;
    size_t behind = 1 - front;
    for (real bump : {0.05, 0.1, 0.2}) {
        auto modified = layers;
        Tensor alpha = modified[front].alpha.clone();
        alpha.data()[0] = std::min(real(1), alpha.at(0) + bump);
        modified[front].alpha = alpha;
        CompositeResult after = composite(modified);
        EXPECT_LE(after.instance_weights[behind].at(0), before.instance_weights[behind].at(0) + 1e-12);
        EXPECT_LE(after.instance_weights[layers.size() - 1].at(0),
                  before.instance_weights[layers.size() - 1].at(0) + 1e-12);
    }
}

TEST(Composite, GradcheckColorsAndAlphas) {
    Rng rng(163);
    // well-separated depths and interior alphas keep the ordering frozen
    Tensor c0 = Tensor::zeros({3, 3, 3});
    Tensor c1 = Tensor::zeros({3, 3, 3});
    Tensor cb = Tensor::zeros({3, 3, 3});
    for (int64_t i = 0; i < c0.size(); ++i) {
        c0.data()[i] = rng.uniform(0.1, 0.9);
        c1.data()[i] = rng.uniform(0.1, 0.9);
        cb.data()[i] = rng.uniform(0.1, 0.9);
    }
    Tensor a0 = Tensor::zeros({3, 3});
    Tensor a1 = Tensor::zeros({3, 3});
    for (int64_t i = 0; i < a0.size(); ++i) {
        a0.data()[i] = rng.uniform(0.2, 0.8);
        a1.data()[i] = rng.uniform(0.2, 0.8);
    }
    Tensor d0 = Tensor::full({3, 3}, 2.0);
    Tensor d1 = Tensor::full({3, 3}, 5.0);
    Tensor db = Tensor::full({3, 3}, 15.0);

    std::vector<Tensor> inputs = {c0, c1, cb, a0, a1};
    auto f = [&](Tape&, std::span<const Tensor> in) {
        RefinedLayer l0{in[0], in[3], d0, false, 0};
        RefinedLayer l1{in[1], in[4], d1, false, 1};
        RefinedLayer lb{in[2], Tensor::full({3, 3}, 1), db, true, 2};
        RefinedLayer layers[] = {l0, l1, lb};
        CompositeResult r = composite(layers);
        return op::sum(op::square(r.image));
    };
    EXPECT_LT(gradcheck(f, inputs).max_rel_error, 1e-5);
}
