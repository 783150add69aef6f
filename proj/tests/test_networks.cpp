#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "primcomp/gradcheck.hpp"
#include "primcomp/networks.hpp"

using namespace primcomp;
using namespace primcomp::net;
namespace op = primcomp::ops;

namespace {

TrainConfig tiny_config() {
    TrainConfig config;
    config.image_size = 16;
    config.z_dim = 16;
    config.trunk_width = 24;
    config.n_foreground = 2;
    config.points = 6;
    config.channels = 3;
    config.g2d_width = 2;
    config.d_width = 2;
    config.sphere_rows = 4;
    config.sphere_cols = 8;
    config.sphere_mesh_res = 4;
    config.cuboid_tex = 2;
    return config;
}

Tensor random_z(const TrainConfig& config, Rng& rng) {
    Tensor z = Tensor::zeros({config.z_dim});
    for (int64_t i = 0; i < z.size(); ++i) z.data()[i] = rng.normal();
    return z;
}

proj::FeatureTriplet random_triplet(const TrainConfig& config, Rng& rng) {
    int64_t s = config.image_size;
    proj::FeatureTriplet t;
    t.X = Tensor::zeros({config.channels, s, s});
    t.A = Tensor::zeros({s, s});
    t.D = Tensor::zeros({s, s});
    for (int64_t i = 0; i < t.X.size(); ++i) t.X.data()[i] = rng.uniform(-1, 1);
    for (int64_t i = 0; i < t.A.size(); ++i) t.A.data()[i] = rng.uniform(0, 1);
    for (int64_t i = 0; i < t.D.size(); ++i) t.D.data()[i] = rng.uniform(1, 10);
    return t;
}

}  // namespace

TEST(Generator3DTest, HeadCountAndBudgets) {
    TrainConfig config = tiny_config();
    WeightDict weights;
    Rng rng(167);
    Generator3D::init(weights, config, rng);
    Tensor z = random_z(config, rng);
    TapedWeights tw(nullptr, weights);
    std::vector<Tensor> raw = Generator3D::forward(tw, z, config);
    ASSERT_EQ(raw.size(), static_cast<size_t>(config.primitive_count()));
    for (int i = 0; i < config.primitive_count(); ++i) {
        EXPECT_EQ(raw[static_cast<size_t>(i)].size(), prim::raw_budget(config.primitive_spec(i)));
    }
}

TEST(Generator3DTest, DifferentLatentsDiffer) {
    TrainConfig config = tiny_config();
    WeightDict weights;
    Rng rng(173);
    Generator3D::init(weights, config, rng);
    TapedWeights tw(nullptr, weights);
    std::vector<Tensor> a = Generator3D::forward(tw, random_z(config, rng), config);
    std::vector<Tensor> b = Generator3D::forward(tw, random_z(config, rng), config);
    real max_diff = 0;
    for (int64_t i = 0; i < a[0].size(); ++i) max_diff = std::max(max_diff, std::abs(a[0].at(i) - b[0].at(i)));
    EXPECT_GT(max_diff, 1e-6);
}

TEST(Generator3DTest, GradcheckWrtLatent) {
    TrainConfig config = tiny_config();
    WeightDict weights;
    Rng rng(179);
    Generator3D::init(weights, config, rng);
    std::vector<Tensor> inputs = {random_z(config, rng)};
    auto f = [&](Tape& tape, std::span<const Tensor> in) {
        TapedWeights tw(&tape, weights);
        std::vector<Tensor> raw = Generator3D::forward(tw, in[0], config);
        Tensor total = op::sum(op::square(raw[0]));
        for (size_t i = 1; i < raw.size(); ++i) total = op::add(total, op::sum(op::square(raw[i])));
        return total;
    };
    EXPECT_LT(gradcheck(f, inputs).max_rel_error, 1e-4);
}

TEST(Adain, ZeroStyleNormalizes) {
    Rng rng(181);
    Tensor x = Tensor::zeros({3, 6, 6});
    for (int64_t i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-4, 4);
    Tensor style = Tensor::zeros({6});
    Tensor y = adain(x, style);
    for (int64_t c = 0; c < 3; ++c) {
        real mean = 0, var = 0;
        for (int64_t i = 0; i < 36; ++i) mean += y.at(c * 36 + i);
        mean /= 36;
        for (int64_t i = 0; i < 36; ++i) {
            real d = y.at(c * 36 + i) - mean;
            var += d * d;
        }
        var /= 36;
        EXPECT_NEAR(mean, 0.0, 1e-4);
        EXPECT_NEAR(var, 1.0, 1e-4);
    }
}

TEST(Adain, ConstantChannelBecomesShift) {
    Tensor x = Tensor::full({2, 4, 4}, 7.0);
    Tensor style = Tensor::from({4}, {0.5, -0.3, 1.25, -0.75});
    Tensor y = adain(x, style);
    for (int64_t i = 0; i < 16; ++i) {
        EXPECT_NEAR(y.at(i), 1.25, 1e-9);       // variance guard zeroes the scale path
        EXPECT_NEAR(y.at(16 + i), -0.75, 1e-9);
    }
}

TEST(Adain, GradcheckWrtStyle) {
    Rng rng(191);
    Tensor x = Tensor::zeros({2, 5, 5});
    for (int64_t i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-2, 2);
    Tensor style = Tensor::zeros({4});
    for (int64_t i = 0; i < 4; ++i) style.data()[i] = rng.uniform(-1, 1);
    std::vector<Tensor> inputs = {style, x};
    auto f = [](Tape&, std::span<const Tensor> in) {
        return op::sum(op::square(adain(in[1], in[0])));
    };
    EXPECT_LT(gradcheck(f, inputs).max_rel_error, 1e-4);
}

TEST(Generator2DTest, OutputRangesAndDeterminism) {
    TrainConfig config = tiny_config();
    WeightDict weights;
    Rng rng(193);
    Generator2D::init(weights, config, rng);
    TapedWeights tw(nullptr, weights);
    for (int draw = 0; draw < 200; ++draw) {
        proj::FeatureTriplet t = random_triplet(config, rng);
        RefineOutput out = Generator2D::forward(tw, t, config);
        for (int64_t i = 0; i < out.color.size(); ++i) {
            ASSERT_GT(out.color.at(i), 0.0);
            ASSERT_LT(out.color.at(i), 1.0);
        }
        for (int64_t i = 0; i < out.alpha.size(); ++i) {
            ASSERT_GT(out.alpha.at(i), 0.0);
            ASSERT_LT(out.alpha.at(i), 1.0);
        }
        for (int64_t i = 0; i < out.depth.size(); ++i) ASSERT_GT(out.depth.at(i), config.d_near);
    }
    proj::FeatureTriplet t = random_triplet(config, rng);
    RefineOutput a = Generator2D::forward(tw, t, config);
    RefineOutput b = Generator2D::forward(tw, t, config);
    for (int64_t i = 0; i < a.color.size(); ++i) ASSERT_EQ(a.color.at(i), b.color.at(i));
}

TEST(Generator2DTest, WeightSharingUsesIdenticalTensors) {
    TrainConfig config = tiny_config();
    WeightDict weights;
    Rng rng(197);
    Generator2D::init(weights, config, rng);
    Tape tape;
    TapedWeights tw(&tape, weights);
    proj::FeatureTriplet t1 = random_triplet(config, rng);
    proj::FeatureTriplet t2 = random_triplet(config, rng);
    Generator2D::forward(tw, t1, config);
    size_t leafed_after_first = tw.leafed().size();
    Generator2D::forward(tw, t2, config);
    EXPECT_EQ(tw.leafed().size(), leafed_after_first);  // same leafs reused
    for (const auto& [name, leaf] : tw.leafed()) {
        EXPECT_EQ(leaf.data(), weights.at(name).data());  // same buffer identity
    }
}

TEST(Generator2DTest, GradcheckWrtConvKernel) {
    TrainConfig config = tiny_config();
    WeightDict weights;
    Rng rng(199);
    Generator2D::init(weights, config, rng);
    proj::FeatureTriplet t = random_triplet(config, rng);
    std::vector<Tensor> inputs = {weights.at("g2d.dec2.w").clone()};
    auto f = [&](Tape& tape, std::span<const Tensor> in) {
        WeightDict local;
        for (const auto& [name, tensor] : weights.tensors) {
            local.tensors.emplace(name, name == "g2d.dec2.w" ? in[0] : tensor);
        }
        TapedWeights tw(&tape, local);
        RefineOutput out = Generator2D::forward(tw, t, config);
        return op::add(op::sum(op::square(out.color)),
                       op::add(op::sum(op::square(out.alpha)), op::sum(op::mul_scalar(out.depth, 0.01))));
    };
    EXPECT_LT(gradcheck(f, inputs).max_rel_error, 1e-3);
}

TEST(SpectralNorm, DiagonalMatrixConverges) {
    Tensor w = Tensor::from({2, 2}, {3, 0, 0, 1});
    Rng rng(211);
    std::vector<real> u = {rng.normal(), rng.normal()};
    real norm = std::sqrt(u[0] * u[0] + u[1] * u[1]);
    u[0] /= norm;
    u[1] /= norm;
    std::vector<real> v;
    Tensor normalized;
    for (int it = 0; it < 25; ++it) normalized = spectral_normalize(w, 2, u, v, true);
    EXPECT_NEAR(oracles::top_singular_value(normalized, 2), 1.0, 1e-6);
    EXPECT_NEAR(normalized.at(0), 1.0, 1e-6);  // diag(3,1)/3
}

TEST(SpectralNorm, OrthogonalMatrixUnchanged) {
    real c = std::cos(0.7), s = std::sin(0.7);
    Tensor w = Tensor::from({2, 2}, {c, -s, s, c});
    Rng rng(223);
    std::vector<real> u = {1, 0};
    std::vector<real> v;
    Tensor normalized;
    for (int it = 0; it < 30; ++it) normalized = spectral_normalize(w, 2, u, v, true);
    for (int64_t i = 0; i < 4; ++i) EXPECT_NEAR(normalized.at(i), w.at(i), 1e-6);
}

TEST(SpectralNorm, InitDirectionInvariant) {
    Rng rng(227);
    Tensor w = Tensor::zeros({4, 6});
    for (int64_t i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-1, 1);
    real sigmas[2];
    for (int trial = 0; trial < 2; ++trial) {
        std::vector<real> u(4);
        real norm = 0;
        for (real& x : u) {
            x = rng.normal();
            norm += x * x;
        }
        for (real& x : u) x /= std::sqrt(norm);
        std::vector<real> v;
        for (int it = 0; it < 200; ++it) spectral_normalize(w, 4, u, v, true);
        // recover sigma from u^T W v
        real sigma = 0;
        for (int64_t r = 0; r < 4; ++r) {
            real acc = 0;
            for (int64_t c = 0; c < 6; ++c) acc += w.at(r * 6 + c) * v[static_cast<size_t>(c)];
            sigma += u[static_cast<size_t>(r)] * acc;
        }
        sigmas[trial] = sigma;
    }
    EXPECT_NEAR(sigmas[0], sigmas[1], 1e-6);
    EXPECT_NEAR(sigmas[0], oracles::top_singular_value(w, 4), 1e-6);
}

TEST(SpectralNorm, ZeroMatrixClamped) {
    Tensor w = Tensor::zeros({2, 2});
    std::vector<real> u = {1, 0};
    std::vector<real> v;
    Tensor normalized = spectral_normalize(w, 2, u, v, true);
    for (int64_t i = 0; i < 4; ++i) EXPECT_TRUE(std::isfinite(normalized.at(i)));
}

TEST(DiscriminatorTest, ConditionChangesLogit) {
    TrainConfig config = tiny_config();
    WeightDict weights;
    SpectralState state;
    Rng rng(229);
    Discriminator::init(weights, state, config, rng);
    Tensor image = Tensor::zeros({3, config.image_size, config.image_size});
    for (int64_t i = 0; i < image.size(); ++i) image.data()[i] = rng.uniform(0, 1);
    TapedWeights tw(nullptr, weights);
    real l0 = Discriminator::forward(tw, state, image, 0, config).item();
    real l1 = Discriminator::forward(tw, state, image, 1, config).item();
    EXPECT_NE(l0, l1);
}

TEST(DiscriminatorTest, FiniteOnExtremeInputs) {
    TrainConfig config = tiny_config();
    WeightDict weights;
    SpectralState state;
    Rng rng(233);
    Discriminator::init(weights, state, config, rng);
    TapedWeights tw(nullptr, weights);
    Tensor zeros = Tensor::zeros({3, config.image_size, config.image_size});
    Tensor ones = Tensor::full({3, config.image_size, config.image_size}, 1);
    EXPECT_TRUE(std::isfinite(Discriminator::forward(tw, state, zeros, 0, config).item()));
    EXPECT_TRUE(std::isfinite(Discriminator::forward(tw, state, ones, 1, config).item()));
}

TEST(DiscriminatorTest, GradcheckLogitWrtImage) {
    TrainConfig config = tiny_config();
    WeightDict weights;
    SpectralState state;
    Rng rng(239);
    Discriminator::init(weights, state, config, rng);
    Tensor image = Tensor::zeros({3, config.image_size, config.image_size});
    for (int64_t i = 0; i < image.size(); ++i) image.data()[i] = rng.uniform(0, 1);
    std::vector<Tensor> inputs = {image};
    auto f = [&](Tape& tape, std::span<const Tensor> in) {
        TapedWeights tw(&tape, weights);
        return Discriminator::forward(tw, state, in[0], 1, config);
    };
    EXPECT_LT(gradcheck(f, inputs).max_rel_error, 1e-3);
}

TEST(DiscriminatorTest, InputGradientMatchesBackward) {
    TrainConfig config = tiny_config();
    WeightDict weights;
    SpectralState state;
    Rng rng(241);
    Discriminator::init(weights, state, config, rng);
    Tensor image = Tensor::zeros({3, config.image_size, config.image_size});
    for (int64_t i = 0; i < image.size(); ++i) image.data()[i] = rng.uniform(0, 1);

    // reverse-mode gradient of the logit wrt the image
    Tape tape;
    Tensor leaf_image = tape.leaf(image);
    TapedWeights tw(&tape, weights);
    Tensor logit = Discriminator::forward(tw, state, leaf_image, 1, config);
    GradStore grads = tape.backward(logit);
    Tensor expected = grads.grad(leaf_image);

    // hand-written differentiable sweep
    Tape tape2;
    TapedWeights tw2(&tape2, weights);
    Tensor sweep = Discriminator::input_gradient(tw2, state, image, 1, config);

    ASSERT_EQ(expected.shape(), sweep.shape());
    for (int64_t i = 0; i < expected.size(); ++i) {
        EXPECT_NEAR(expected.at(i), sweep.at(i), 1e-10);
    }
}

TEST(ConfigTest, JsonRoundTrip) {
    TrainConfig config;
    config.n_foreground = 2;
    config.learning_rate = 3.25e-4;
    config.seed = 123456789;
    std::string text = config.to_json_text();
    TrainConfig back = TrainConfig::from_json_text(text);
    EXPECT_EQ(back.to_json_text(), text);
    EXPECT_EQ(back.config_hash(), config.config_hash());
    EXPECT_EQ(back.learning_rate, config.learning_rate);
    EXPECT_THROW(TrainConfig::from_json_text("{\"bogus\": 1}"), std::invalid_argument);
    EXPECT_THROW(TrainConfig::from_json_text("not json"), std::invalid_argument);
}
