#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "primcomp/tensor.hpp"

namespace primcomp {

class Tape;

// Gradients produced by one backward pass, keyed by tape value id.
class GradStore {
public:
    // Undefined tensor if `t` was not reachable from the loss.
    Tensor grad(const Tensor& t) const;
    bool has(const Tensor& t) const;

private:
    friend class Tape;
    const Tape* tape_ = nullptr;
    std::vector<std::shared_ptr<std::vector<real>>> adjoints_;
};

// Reverse-mode tape. Recording is single-threaded; backward visits every
// recorded operation reachable from the loss exactly once, in reverse
// recording order, which makes gradient accumulation deterministic.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // Registers `t` as a differentiable input and returns the attached view.
    Tensor leaf(const Tensor& t);

    // Per-operation context handed to backward functions.
    class BackwardCtx {
    public:
        // Adjoint of the k-th output; empty span if the output does not
        // participate in the loss.
        std::span<const real> out_adjoint(size_t k) const;
        // Accumulation buffer for the k-th input; check input_on_tape first.
        std::span<real> input_adjoint(size_t k);
        bool input_on_tape(size_t k) const;

    private:
        friend class Tape;
        Tape* tape_ = nullptr;
        size_t op_index_ = 0;
    };

    using BackwardFn = std::function<void(BackwardCtx&)>;

    // Records an operation. Inputs may include detached tensors (constants);
    // those never receive adjoints. Output tensors are attached to this tape
    // in place. Pass a null BackwardFn for non-differentiable byproducts.
    void record(std::vector<Tensor> inputs, std::span<Tensor* const> outputs, BackwardFn backward);
    Tensor record1(std::vector<Tensor> inputs, Tensor output, BackwardFn backward);

    // Root must be a scalar on this tape.
    GradStore backward(const Tensor& loss) const;

    size_t num_values() const { return values_.size(); }
    size_t num_ops() const { return ops_.size(); }

private:
    friend class GradStore;

    struct ValueInfo {
        Shape shape;
    };
    struct OpRecord {
        std::vector<Tensor> inputs;        // keeps forward buffers alive
        std::vector<int32_t> output_ids;
        BackwardFn backward;
    };

    int32_t new_value(const Shape& shape);

    std::vector<ValueInfo> values_;
    std::vector<OpRecord> ops_;

    // Scratch state used during backward (mutable: backward is logically const).
    mutable std::vector<std::shared_ptr<std::vector<real>>> adjoints_;
};

// True if all tensors are either detached or on the same tape; returns that
// tape (nullptr when all detached). Throws on a mix of two tapes.
Tape* common_tape(std::initializer_list<const Tensor*> tensors);

}  // namespace primcomp
