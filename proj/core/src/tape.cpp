#include "primcomp/tape.hpp"

#include <algorithm>

namespace primcomp {

Tensor GradStore::grad(const Tensor& t) const {
    if (!has(t)) return {};
    Tensor g;
    g = Tensor::zeros(t.shape());
    const auto& adj = *adjoints_[static_cast<size_t>(t.value_id())];
    std::copy(adj.begin(), adj.end(), g.data());
    return g;
}

bool GradStore::has(const Tensor& t) const {
    if (!t.on_tape() || t.tape() != tape_) return false;
    size_t id = static_cast<size_t>(t.value_id());
    return id < adjoints_.size() && adjoints_[id] != nullptr;
}

int32_t Tape::new_value(const Shape& shape) {
    values_.push_back(ValueInfo{shape});
    return static_cast<int32_t>(values_.size() - 1);
}

Tensor Tape::leaf(const Tensor& t) {
    check(t.defined(), "cannot register an undefined tensor as a leaf");
    check(!t.on_tape(), "tensor is already attached to a tape");
    Tensor out = t;
    out.tape_ = this;
    out.id_ = new_value(t.shape());
    return out;
}

std::span<const real> Tape::BackwardCtx::out_adjoint(size_t k) const {
    const auto& op = tape_->ops_[op_index_];
    const auto& slot = tape_->adjoints_[static_cast<size_t>(op.output_ids.at(k))];
    if (!slot) return {};
    return {slot->data(), slot->size()};
}

bool Tape::BackwardCtx::input_on_tape(size_t k) const {
    const auto& in = tape_->ops_[op_index_].inputs.at(k);
    return in.on_tape() && in.tape() == tape_;
}

std::span<real> Tape::BackwardCtx::input_adjoint(size_t k) {
    const auto& in = tape_->ops_[op_index_].inputs.at(k);
    check(in.on_tape() && in.tape() == tape_, "input_adjoint on a detached input");
    auto& slot = tape_->adjoints_[static_cast<size_t>(in.value_id())];
    if (!slot) slot = std::make_shared<std::vector<real>>(static_cast<size_t>(in.size()), real(0));
    return {slot->data(), slot->size()};
}

void Tape::record(std::vector<Tensor> inputs, std::span<Tensor* const> outputs, BackwardFn backward) {
    for (const Tensor& in : inputs) {
        check(in.defined(), "recorded op has an undefined input");
        check(!in.on_tape() || in.tape() == this, "recorded op mixes tensors from different tapes");
    }
    OpRecord op;
    op.inputs = std::move(inputs);
    for (Tensor* out : outputs) {
        check(out->defined() && !out->on_tape(), "op outputs must be fresh detached tensors");
        out->tape_ = this;
        out->id_ = new_value(out->shape());
        op.output_ids.push_back(out->id_);
    }
    op.backward = std::move(backward);
    ops_.push_back(std::move(op));
}

Tensor Tape::record1(std::vector<Tensor> inputs, Tensor output, BackwardFn backward) {
    Tensor* outs[] = {&output};
    record(std::move(inputs), outs, std::move(backward));
    return output;
}

GradStore Tape::backward(const Tensor& loss) const {
    check(loss.on_tape() && loss.tape() == this, "backward root is not on this tape");
    check(loss.size() == 1, "backward root must be a scalar, got shape " + shape_str(loss.shape()));

    // Mark values and ops that the loss depends on.
    std::vector<char> value_needed(values_.size(), 0);
    std::vector<char> op_needed(ops_.size(), 0);
    value_needed[static_cast<size_t>(loss.value_id())] = 1;
    for (size_t i = ops_.size(); i-- > 0;) {
        const OpRecord& op = ops_[i];
        bool needed = false;
        for (int32_t out : op.output_ids) {
            if (value_needed[static_cast<size_t>(out)]) {
                needed = true;
                break;
            }
        }
        if (!needed) continue;
        op_needed[i] = 1;
        for (const Tensor& in : op.inputs) {
            if (in.on_tape()) value_needed[static_cast<size_t>(in.value_id())] = 1;
        }
    }

    adjoints_.assign(values_.size(), nullptr);
    adjoints_[static_cast<size_t>(loss.value_id())] =
        std::make_shared<std::vector<real>>(1, real(1));

    for (size_t i = ops_.size(); i-- > 0;) {
        if (!op_needed[i] || !ops_[i].backward) continue;
        bool any_out_adjoint = false;
        for (int32_t out : ops_[i].output_ids) {
            if (adjoints_[static_cast<size_t>(out)]) {
                any_out_adjoint = true;
                break;
            }
        }
        if (!any_out_adjoint) continue;
        BackwardCtx ctx;
        ctx.tape_ = const_cast<Tape*>(this);
        ctx.op_index_ = i;
        ops_[i].backward(ctx);
    }

    GradStore store;
    store.tape_ = this;
    store.adjoints_ = std::move(adjoints_);
    adjoints_.clear();
    return store;
}

Tape* common_tape(std::initializer_list<const Tensor*> tensors) {
    Tape* tape = nullptr;
    for (const Tensor* t : tensors) {
        if (!t->on_tape()) continue;
        if (tape == nullptr) {
            tape = t->tape();
        } else {
            check(tape == t->tape(), "operands are recorded on different tapes");
        }
    }
    return tape;
}

}  // namespace primcomp
