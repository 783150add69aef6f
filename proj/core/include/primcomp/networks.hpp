#pragma once

#include <map>
#include <string>
#include <vector>

#include "primcomp/config.hpp"

namespace primcomp::net {

// Named weight tensors; values are detached buffers shared by reference.
struct WeightDict {
    std::map<std::string, Tensor> tensors;

    Tensor& at(const std::string& name);
    const Tensor& at(const std::string& name) const;
    void add(const std::string& name, Tensor t);
    int64_t parameter_count() const;
    WeightDict clone() const;
};

// Leafs each referenced weight exactly once on a tape so every forward in
// the step shares the same differentiable view. With a null tape the raw
// detached weights are returned (inference mode).
class TapedWeights {
public:
    TapedWeights(Tape* tape, const WeightDict& weights) : tape_(tape), dict_(&weights) {}

    Tensor operator()(const std::string& name);
    const std::map<std::string, Tensor>& leafed() const { return leafed_; }
    Tape* tape() const { return tape_; }

private:
    Tape* tape_;
    const WeightDict* dict_;
    std::map<std::string, Tensor> leafed_;
};

// Power-iteration vectors per spectrally-normalized weight.
struct SpectralState {
    std::map<std::string, std::vector<real>> u;
    std::map<std::string, std::vector<real>> v;
};

// One power-iteration step on the raw weight values (optional side effect),
// then W / sigma with sigma = u^T W v, u and v held constant on the tape.
// weight is viewed as (rows, size/rows); sigma is clamped to >= 1e-12.
Tensor spectral_normalize(const Tensor& weight, int64_t rows, std::vector<real>& u,
                          std::vector<real>& v, bool update);

// Fully connected trunk with N+1 heads emitting raw attribute vectors.
class Generator3D {
public:
    static void init(WeightDict& weights, const TrainConfig& config, Rng& rng);
    // z (z_dim) -> raw vectors, index n_foreground = background
    static std::vector<Tensor> forward(TapedWeights& weights, const Tensor& z,
                                       const TrainConfig& config);
};

// per-channel normalization over H,W followed by a styled affine transform:
// y = normalized * (1 + style[0:C]) + style[C:2C]
Tensor adain(const Tensor& features, const Tensor& style);

struct RefineOutput {
    Tensor color;  // (3,S,S) in (0,1)
    Tensor alpha;  // (S,S) in (0,1)
    Tensor depth;  // (S,S) > d_near
};

// Shared-weight encoder/residual/decoder refiner applied independently per
// primitive (amodal prediction).
class Generator2D {
public:
    static void init(WeightDict& weights, const TrainConfig& config, Rng& rng);
    static RefineOutput forward(TapedWeights& weights, const proj::FeatureTriplet& triplet,
                                const TrainConfig& config);
};

// Conditional convolutional discriminator with spectral normalization on all
// conv and fully connected weights at call time.
class Discriminator {
public:
    static void init(WeightDict& weights, SpectralState& state, const TrainConfig& config, Rng& rng);
    // single power-iteration update per weight; call once per training step
    static void update_power_iteration(const WeightDict& weights, SpectralState& state,
                                       const TrainConfig& config);
    // image (3,S,S), condition flag c as a constant fourth channel -> logit (1)
    static Tensor forward(TapedWeights& weights, SpectralState& state, const Tensor& image, int c,
                          const TrainConfig& config);
    // d(logit)/d(image) expressed with differentiable tape ops (reverse sweep),
    // enabling the R1 penalty to receive gradients itself
    static Tensor input_gradient(TapedWeights& weights, SpectralState& state, const Tensor& image,
                                 int c, const TrainConfig& config);
};

}  // namespace primcomp::net
