#include "primcomp/compositor.hpp"

#include <algorithm>

namespace primcomp::comp {

namespace {

struct CompositeSaved {
    std::vector<Tensor> colors, alphas;
    std::vector<char> is_background;
    int64_t height = 0, width = 0;
    std::vector<uint8_t> order;  // (H*W, L) per-pixel depth order
};

}  // namespace

CompositeResult composite(std::span<const RefinedLayer> layers) {
    check(!layers.empty(), "composite requires at least one layer");
    size_t nlayers = layers.size();
    check(nlayers < 250, "too many layers");
    int background_count = 0;
    for (const RefinedLayer& l : layers) background_count += l.is_background ? 1 : 0;
    check(background_count == 1, "composite requires exactly one background layer, got " +
                                     std::to_string(background_count));
    const Shape& ashape = layers[0].alpha.shape();
    check(ashape.size() == 2, "layer alpha must be (H,W)");
    int64_t h = ashape[0], w = ashape[1];
    for (const RefinedLayer& l : layers) {
        check(l.color.defined() && l.color.rank() == 3 && l.color.dim(0) == 3 &&
                  l.color.dim(1) == h && l.color.dim(2) == w,
              "layer color must be (3,H,W)");
        check(l.alpha.shape() == ashape && l.depth.shape() == ashape,
              "layer alpha/depth shapes disagree");
    }

    auto saved = std::make_shared<CompositeSaved>();
    saved->height = h;
    saved->width = w;
    int64_t npix = h * w;
    saved->order.resize(static_cast<size_t>(npix) * nlayers);
    for (const RefinedLayer& l : layers) {
        saved->colors.push_back(l.color.detached());
        saved->alphas.push_back(l.alpha.detached());
        saved->is_background.push_back(l.is_background ? 1 : 0);
    }

    Tensor image = Tensor::zeros({3, h, w});
    std::vector<Tensor> weights;
    weights.reserve(nlayers);
    for (size_t i = 0; i < nlayers; ++i) weights.push_back(Tensor::zeros({h, w}));

    std::vector<uint8_t> idx(nlayers);
    for (int64_t p = 0; p < npix; ++p) {
        for (size_t i = 0; i < nlayers; ++i) idx[i] = static_cast<uint8_t>(i);
        std::sort(idx.begin(), idx.end(), [&](uint8_t a, uint8_t b) {
            bool bga = layers[a].is_background, bgb = layers[b].is_background;
            if (bga != bgb) return bgb;  // background strictly last
            real da = layers[a].depth.at(p), db = layers[b].depth.at(p);
            if (da != db) return da < db;
            return layers[a].id < layers[b].id;  // permutation-invariant tie-break
        });
        std::copy(idx.begin(), idx.end(), saved->order.begin() + p * static_cast<int64_t>(nlayers));

        real transmittance = 1;
        for (size_t k = 0; k < nlayers; ++k) {
            size_t i = idx[k];
            real a = layers[i].is_background ? real(1) : layers[i].alpha.at(p);
            real contribution = a * transmittance;
            weights[i].data()[p] = contribution;
            for (int c = 0; c < 3; ++c) {
                image.data()[c * npix + p] += layers[i].color.at(c * npix + p) * contribution;
            }
            transmittance *= real(1) - a;
        }
    }

    Tape* tape = nullptr;
    for (const RefinedLayer& l : layers) {
        Tape* t = common_tape({&l.color, &l.alpha});
        if (t) {
            check(!tape || tape == t, "composite layers on different tapes");
            tape = t;
        }
    }
    CompositeResult result;
    result.instance_weights = std::move(weights);
    if (!tape) {
        result.image = std::move(image);
        return result;
    }

    // inputs: [color_0..color_{L-1}, alpha_0..alpha_{L-1}]
    std::vector<Tensor> inputs;
    inputs.reserve(2 * nlayers);
    for (const RefinedLayer& l : layers) inputs.push_back(l.color);
    for (const RefinedLayer& l : layers) inputs.push_back(l.alpha);
    result.image = tape->record1(std::move(inputs), std::move(image), [saved, nlayers](Tape::BackwardCtx& ctx) {
        auto g = ctx.out_adjoint(0);
        if (g.empty()) return;
        int64_t npix = saved->height * saved->width;
        std::vector<std::span<real>> gcol(nlayers), galpha(nlayers);
        for (size_t i = 0; i < nlayers; ++i) {
            if (ctx.input_on_tape(i)) gcol[i] = ctx.input_adjoint(i);
            if (ctx.input_on_tape(nlayers + i)) galpha[i] = ctx.input_adjoint(nlayers + i);
        }
        std::vector<real> trans(nlayers);
        for (int64_t p = 0; p < npix; ++p) {
            const uint8_t* order = saved->order.data() + p * static_cast<int64_t>(nlayers);
            // transmittance in front of each sorted layer
            real t = 1;
            for (size_t k = 0; k < nlayers; ++k) {
                size_t i = order[k];
                trans[k] = t;
                real a = saved->is_background[i] ? real(1) : saved->alphas[i].at(p);
                t *= real(1) - a;
            }
            // suffix accumulators rest(c) = sum_{m>k} col_m a_m prod_{k<j<m}(1-a_j)
            real rest[3] = {0, 0, 0};
            for (size_t k = nlayers; k-- > 0;) {
                size_t i = order[k];
                real a = saved->is_background[i] ? real(1) : saved->alphas[i].at(p);
                real contribution = a * trans[k];
                real dalpha = 0;
                for (int c = 0; c < 3; ++c) {
                    real gc = g[c * npix + p];
                    real col = saved->colors[i].at(c * npix + p);
                    if (!gcol[i].empty()) gcol[i][c * npix + p] += gc * contribution;
                    dalpha += gc * trans[k] * (col - rest[c]);
                    rest[c] = col * a + (real(1) - a) * rest[c];
                }
                if (!saved->is_background[i] && !galpha[i].empty()) galpha[i][p] += dalpha;
            }
        }
    });
    return result;
}

bool composite_permutation_check(std::span<const RefinedLayer> layers,
                                 std::span<const size_t> permutation) {
    check(permutation.size() == layers.size(), "permutation size mismatch");
    CompositeResult base = composite(layers);
    std::vector<RefinedLayer> permuted;
    permuted.reserve(layers.size());
    for (size_t i : permutation) permuted.push_back(layers[i]);
    CompositeResult shuffled = composite(permuted);
    for (int64_t i = 0; i < base.image.size(); ++i) {
        if (base.image.at(i) != shuffled.image.at(i)) return false;
    }
    for (size_t k = 0; k < permutation.size(); ++k) {
        const Tensor& a = base.instance_weights[permutation[k]];
        const Tensor& b = shuffled.instance_weights[k];
        for (int64_t i = 0; i < a.size(); ++i) {
            if (a.at(i) != b.at(i)) return false;
        }
    }
    return true;
}

}  // namespace primcomp::comp
