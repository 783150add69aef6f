#include "primcomp/networks.hpp"

#include <cmath>

namespace primcomp::net {

namespace op = primcomp::ops;

Tensor& WeightDict::at(const std::string& name) {
    auto it = tensors.find(name);
    check(it != tensors.end(), "unknown weight '" + name + "'");
    return it->second;
}

const Tensor& WeightDict::at(const std::string& name) const {
    auto it = tensors.find(name);
    check(it != tensors.end(), "unknown weight '" + name + "'");
    return it->second;
}

void WeightDict::add(const std::string& name, Tensor t) {
    check(tensors.find(name) == tensors.end(), "duplicate weight '" + name + "'");
    tensors.emplace(name, std::move(t));
}

int64_t WeightDict::parameter_count() const {
    int64_t n = 0;
    for (const auto& [name, t] : tensors) n += t.size();
    return n;
}

WeightDict WeightDict::clone() const {
    WeightDict copy;
    for (const auto& [name, t] : tensors) copy.tensors.emplace(name, t.clone());
    return copy;
}

Tensor TapedWeights::operator()(const std::string& name) {
    if (!tape_) return dict_->at(name);
    auto it = leafed_.find(name);
    if (it != leafed_.end()) return it->second;
    const Tensor& stored = dict_->at(name);
    // tensors pre-attached to this tape (e.g. under gradcheck) pass through
    Tensor leaf = (stored.on_tape() && stored.tape() == tape_) ? stored : tape_->leaf(stored);
    leafed_.emplace(name, leaf);
    return leaf;
}

namespace {

Tensor uniform_init(Shape shape, int64_t fan_in, Rng& rng) {
    Tensor t = Tensor::zeros(std::move(shape));
    real bound = real(1) / std::sqrt(static_cast<real>(fan_in));
    for (int64_t i = 0; i < t.size(); ++i) t.data()[i] = rng.uniform(-bound, bound);
    return t;
}

// fully connected layer on a (1,in) row vector
Tensor linear(TapedWeights& weights, const std::string& name, const Tensor& x) {
    Tensor w = weights(name + ".w");
    Tensor b = weights(name + ".b");
    return op::add(op::matmul(x, w), op::reshape(b, {1, b.size()}));
}

Tensor conv_block(TapedWeights& weights, const std::string& name, const Tensor& x, int stride) {
    Tensor w = weights(name + ".w");
    Tensor b = weights(name + ".b");
    Tensor y = op::conv2d(x, w, stride, 1);
    return op::add(y, op::reshape(b, {b.size(), 1, 1}));
}

}  // namespace

void Generator3D::init(WeightDict& weights, const TrainConfig& config, Rng& rng) {
    int64_t in = config.z_dim;
    for (int l = 0; l < config.trunk_layers; ++l) {
        std::string name = "g3d.trunk" + std::to_string(l);
        weights.add(name + ".w", uniform_init({in, config.trunk_width}, in, rng));
        weights.add(name + ".b", Tensor::zeros({config.trunk_width}));
        in = config.trunk_width;
    }
    for (int i = 0; i < config.primitive_count(); ++i) {
        int64_t budget = prim::raw_budget(config.primitive_spec(i));
        std::string name = "g3d.head" + std::to_string(i);
        weights.add(name + ".w", uniform_init({in, budget}, in, rng));
        weights.add(name + ".b", Tensor::zeros({budget}));
    }
}

std::vector<Tensor> Generator3D::forward(TapedWeights& weights, const Tensor& z,
                                         const TrainConfig& config) {
    check(z.defined() && z.size() == config.z_dim,
          "latent code must have length " + std::to_string(config.z_dim));
    Tensor h = op::reshape(z, {1, config.z_dim});
    for (int l = 0; l < config.trunk_layers; ++l) {
        h = op::leaky_relu(linear(weights, "g3d.trunk" + std::to_string(l), h), config.lrelu_slope);
    }
    std::vector<Tensor> raw;
    raw.reserve(static_cast<size_t>(config.primitive_count()));
    for (int i = 0; i < config.primitive_count(); ++i) {
        Tensor out = linear(weights, "g3d.head" + std::to_string(i), h);
        raw.push_back(op::reshape(out, {out.size()}));
    }
    return raw;
}

Tensor adain(const Tensor& features, const Tensor& style) {
    check(features.defined() && features.rank() == 3, "adain features must be (C,H,W)");
    int64_t c = features.dim(0);
    check(style.defined() && style.size() == 2 * c,
          "adain style must have length 2C = " + std::to_string(2 * c));
    int64_t spatial[] = {1, 2};
    Tensor mu = op::mean(features, spatial);                       // (C)
    Tensor centered = op::sub(features, op::reshape(mu, {c, 1, 1}));
    Tensor var = op::mean(op::square(centered), spatial);          // (C)
    Tensor inv_std = op::div(Tensor::full({c}, 1), op::sqrt(op::add_scalar(var, real(1e-5))));
    Tensor normalized = op::mul(centered, op::reshape(inv_std, {c, 1, 1}));
    Tensor scale = op::add_scalar(op::slice0(style, 0, c), 1);
    Tensor shift = op::slice0(style, c, 2 * c);
    return op::add(op::mul(normalized, op::reshape(scale, {c, 1, 1})),
                   op::reshape(shift, {c, 1, 1}));
}

void Generator2D::init(WeightDict& weights, const TrainConfig& config, Rng& rng) {
    int64_t w = config.g2d_width;
    int64_t in_ch = config.channels + 2;
    weights.add("g2d.enc1.w", uniform_init({w, in_ch, 3, 3}, in_ch * 9, rng));
    weights.add("g2d.enc1.b", Tensor::zeros({w}));
    weights.add("g2d.enc2.w", uniform_init({2 * w, w, 3, 3}, w * 9, rng));
    weights.add("g2d.enc2.b", Tensor::zeros({2 * w}));
    for (int r = 1; r <= 2; ++r) {
        for (int cidx = 1; cidx <= 2; ++cidx) {
            std::string name = "g2d.res" + std::to_string(r) + ".conv" + std::to_string(cidx);
            weights.add(name + ".w", uniform_init({2 * w, 2 * w, 3, 3}, 2 * w * 9, rng));
            weights.add(name + ".b", Tensor::zeros({2 * w}));
        }
    }
    // one learned style projection per AdaIN site, fed by pooled input features
    for (int s = 1; s <= 4; ++s) {
        std::string name = "g2d.style" + std::to_string(s);
        weights.add(name + ".w", uniform_init({in_ch, 4 * w}, in_ch, rng));
        weights.add(name + ".b", Tensor::zeros({4 * w}));
    }
    weights.add("g2d.dec1.w", uniform_init({w, 2 * w, 3, 3}, 2 * w * 9, rng));
    weights.add("g2d.dec1.b", Tensor::zeros({w}));
    weights.add("g2d.dec2.w", uniform_init({w, w, 3, 3}, w * 9, rng));
    weights.add("g2d.dec2.b", Tensor::zeros({w}));
    weights.add("g2d.color.w", uniform_init({3, w, 3, 3}, w * 9, rng));
    weights.add("g2d.color.b", Tensor::zeros({3}));
    weights.add("g2d.alpha.w", uniform_init({1, w, 3, 3}, w * 9, rng));
    weights.add("g2d.alpha.b", Tensor::zeros({1}));
    weights.add("g2d.depth.w", uniform_init({1, w, 3, 3}, w * 9, rng));
    // initial depths land near the scene instead of at d_near
    weights.add("g2d.depth.b", Tensor::full({1}, 2));
}

RefineOutput Generator2D::forward(TapedWeights& weights, const proj::FeatureTriplet& triplet,
                                  const TrainConfig& config) {
    int64_t s = config.image_size;
    check(triplet.X.defined() && triplet.X.rank() == 3 && triplet.X.dim(0) == config.channels &&
              triplet.X.dim(1) == s && triplet.X.dim(2) == s,
          "refiner features must be (" + std::to_string(config.channels) + "," +
              std::to_string(s) + "," + std::to_string(s) + "), got " + shape_str(triplet.X.shape()));
    check(triplet.A.defined() && triplet.A.rank() == 2 && triplet.A.dim(0) == s &&
              triplet.A.dim(1) == s && triplet.D.shape() == triplet.A.shape(),
          "refiner alpha/depth must be (S,S)");

    Tensor parts[] = {triplet.X, op::reshape(triplet.A, {1, s, s}),
                      op::reshape(op::mul_scalar(triplet.D, real(1) / config.d_far()), {1, s, s})};
    Tensor input = op::concat0(parts);

    // style vectors from the globally average-pooled input
    int64_t spatial[] = {1, 2};
    Tensor pooled = op::reshape(op::mean(input, spatial), {1, config.channels + 2});
    Tensor styles[4];
    for (int k = 0; k < 4; ++k) {
        Tensor out = linear(weights, "g2d.style" + std::to_string(k + 1), pooled);
        styles[k] = op::reshape(out, {out.size()});
    }

    Tensor h = op::leaky_relu(conv_block(weights, "g2d.enc1", input, 2), config.lrelu_slope);
    h = op::leaky_relu(conv_block(weights, "g2d.enc2", h, 2), config.lrelu_slope);
    for (int r = 0; r < 2; ++r) {
        std::string base = "g2d.res" + std::to_string(r + 1);
        Tensor t = op::leaky_relu(adain(h, styles[2 * r]), config.lrelu_slope);
        t = conv_block(weights, base + ".conv1", t, 1);
        t = op::leaky_relu(adain(t, styles[2 * r + 1]), config.lrelu_slope);
        t = conv_block(weights, base + ".conv2", t, 1);
        h = op::add(h, t);
    }
    h = op::leaky_relu(conv_block(weights, "g2d.dec1", op::upsample2_nearest(h), 1),
                       config.lrelu_slope);
    h = op::leaky_relu(conv_block(weights, "g2d.dec2", op::upsample2_nearest(h), 1),
                       config.lrelu_slope);

    RefineOutput out;
    out.color = op::sigmoid(conv_block(weights, "g2d.color", h, 1));
    out.alpha = op::reshape(op::sigmoid(conv_block(weights, "g2d.alpha", h, 1)), {s, s});
    out.depth = op::reshape(
        op::add_scalar(op::softplus(conv_block(weights, "g2d.depth", h, 1)), config.d_near), {s, s});
    return out;
}

namespace {

struct SnLayer {
    std::string name;
    int64_t rows;
};

std::vector<SnLayer> discriminator_sn_layers(const TrainConfig& config) {
    int64_t w = config.d_width;
    return {{"d.conv1.w", w}, {"d.conv2.w", 2 * w}, {"d.conv3.w", 4 * w}, {"d.conv4.w", 8 * w},
            {"d.fc.w", 1}};
}

struct DiscStash {
    Tensor logit;
    std::vector<Tensor> pre;     // pre-activations of the four conv blocks
    std::vector<Tensor> wnorm;   // normalized conv weights
    std::vector<Shape> in_shapes;
    Tensor wfc_norm;
};

DiscStash discriminator_run(TapedWeights& weights, SpectralState& state, const Tensor& image,
                            int c, const TrainConfig& config) {
    int64_t s = config.image_size;
    check(image.defined() && image.rank() == 3 && image.dim(0) == 3 && image.dim(1) == s &&
              image.dim(2) == s,
          "discriminator image must be (3,S,S), got " + shape_str(image.shape()));
    check(c == 0 || c == 1, "condition flag must be 0 or 1");

    DiscStash stash;
    Tensor cchan = Tensor::full({1, s, s}, static_cast<real>(c));
    Tensor parts[] = {image, cchan};
    Tensor x = op::concat0(parts);

    auto layers = discriminator_sn_layers(config);
    for (int k = 0; k < 4; ++k) {
        stash.in_shapes.push_back(x.shape());
        Tensor w = weights(layers[k].name);
        Tensor wn = spectral_normalize(w, layers[k].rows, state.u.at(layers[k].name),
                                       state.v.at(layers[k].name), /*update=*/false);
        stash.wnorm.push_back(wn);
        Tensor b = weights("d.conv" + std::to_string(k + 1) + ".b");
        Tensor pre = op::add(op::conv2d(x, wn, 2, 1), op::reshape(b, {b.size(), 1, 1}));
        stash.pre.push_back(pre);
        x = op::leaky_relu(pre, config.lrelu_slope);
    }
    Tensor flat = op::reshape(x, {1, x.size()});
    Tensor wfc = weights("d.fc.w");
    stash.wfc_norm =
        spectral_normalize(wfc, 1, state.u.at("d.fc.w"), state.v.at("d.fc.w"), /*update=*/false);
    Tensor logit = op::add(op::matmul(flat, stash.wfc_norm), op::reshape(weights("d.fc.b"), {1, 1}));
    stash.logit = op::reshape(logit, {1});
    return stash;
}

}  // namespace

void Discriminator::init(WeightDict& weights, SpectralState& state, const TrainConfig& config,
                         Rng& rng) {
    int64_t w = config.d_width;
    int64_t s = config.image_size;
    weights.add("d.conv1.w", uniform_init({w, 4, 3, 3}, 4 * 9, rng));
    weights.add("d.conv1.b", Tensor::zeros({w}));
    weights.add("d.conv2.w", uniform_init({2 * w, w, 3, 3}, w * 9, rng));
    weights.add("d.conv2.b", Tensor::zeros({2 * w}));
    weights.add("d.conv3.w", uniform_init({4 * w, 2 * w, 3, 3}, 2 * w * 9, rng));
    weights.add("d.conv3.b", Tensor::zeros({4 * w}));
    weights.add("d.conv4.w", uniform_init({8 * w, 4 * w, 3, 3}, 4 * w * 9, rng));
    weights.add("d.conv4.b", Tensor::zeros({8 * w}));
    int64_t feat = 8 * w * (s / 16) * (s / 16);
    weights.add("d.fc.w", uniform_init({feat, 1}, feat, rng));
    weights.add("d.fc.b", Tensor::zeros({1}));

    for (const SnLayer& layer : discriminator_sn_layers(config)) {
        std::vector<real> u(static_cast<size_t>(layer.rows));
        for (real& x : u) x = rng.normal();
        real norm = 0;
        for (real x : u) norm += x * x;
        norm = std::sqrt(norm);
        for (real& x : u) x /= norm;
        state.u[layer.name] = std::move(u);
        state.v[layer.name] = {};
    }
    // settle v once so the first normalized forward is well-defined
    update_power_iteration(weights, state, config);
}

void Discriminator::update_power_iteration(const WeightDict& weights, SpectralState& state,
                                           const TrainConfig& config) {
    for (const SnLayer& layer : discriminator_sn_layers(config)) {
        spectral_normalize(weights.at(layer.name), layer.rows, state.u.at(layer.name),
                           state.v.at(layer.name), /*update=*/true);
    }
}

Tensor Discriminator::forward(TapedWeights& weights, SpectralState& state, const Tensor& image,
                              int c, const TrainConfig& config) {
    return discriminator_run(weights, state, image, c, config).logit;
}

Tensor Discriminator::input_gradient(TapedWeights& weights, SpectralState& state,
                                     const Tensor& image, int c, const TrainConfig& config) {
    DiscStash stash = discriminator_run(weights, state, image, c, config);
    // reverse sweep in tape ops: d logit / d flat is the fc column itself
    Shape x4_shape = stash.pre[3].shape();
    Tensor g = op::reshape(stash.wfc_norm, x4_shape);
    for (int k = 3; k >= 0; --k) {
        Tensor gpre =
            op::where_positive(stash.pre[k].detached(), g, op::mul_scalar(g, config.lrelu_slope));
        g = op::conv2d_input_grad(stash.wnorm[k], gpre, stash.in_shapes[k], 2, 1);
    }
    return op::slice0(g, 0, 3);  // drop the constant condition channel
}

}  // namespace primcomp::net
