#pragma once

#include <memory>
#include <span>
#include <vector>

#include "primcomp/types.hpp"

namespace primcomp {

class Tape;

// Dense n-dimensional array of real scalars. Copies are shallow (shared
// buffer). A tensor is attached to at most one tape; detached tensors act
// as constants and never receive gradients.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape);
    static Tensor full(Shape shape, real value);
    static Tensor from(Shape shape, std::vector<real> values);
    static Tensor scalar(real value);

    bool defined() const { return buf_ != nullptr; }
    const Shape& shape() const { return shape_; }
    int64_t size() const { return buf_ ? static_cast<int64_t>(buf_->size()) : 0; }
    int64_t dim(size_t i) const { return shape_.at(i); }
    int64_t rank() const { return static_cast<int64_t>(shape_.size()); }

    real* data() { return buf_->data(); }
    const real* data() const { return buf_->data(); }
    std::span<real> span() { return {buf_->data(), buf_->size()}; }
    std::span<const real> span() const { return {buf_->data(), buf_->size()}; }
    real item() const;
    real at(int64_t i) const { return (*buf_)[i]; }

    bool all_finite() const;

    Tape* tape() const { return tape_; }
    int32_t value_id() const { return id_; }
    bool on_tape() const { return tape_ != nullptr; }
    // Same buffer, not recorded on any tape.
    Tensor detached() const;
    // Deep copy of the buffer, not recorded on any tape.
    Tensor clone() const;

private:
    friend class Tape;

    std::shared_ptr<std::vector<real>> buf_;
    Shape shape_;
    Tape* tape_ = nullptr;
    int32_t id_ = -1;
};

}  // namespace primcomp
