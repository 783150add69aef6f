#include "primcomp/tensor.hpp"

#include <cmath>
#include <sstream>

namespace primcomp {

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << "(";
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ", ";
        os << shape[i];
    }
    os << ")";
    return os.str();
}

void fail_invalid(const std::string& what) {
    throw std::invalid_argument(what);
}

void fail_runtime(const std::string& what) {
    throw std::runtime_error(what);
}

void check(bool cond, const std::string& what) {
    if (!cond) fail_invalid(what);
}

Tensor Tensor::zeros(Shape shape) {
    for (int64_t d : shape) check(d > 0, "tensor extents must be positive, got " + shape_str(shape));
    Tensor t;
    t.shape_ = std::move(shape);
    t.buf_ = std::make_shared<std::vector<real>>(numel(t.shape_), real(0));
    return t;
}

Tensor Tensor::full(Shape shape, real value) {
    Tensor t = zeros(std::move(shape));
    for (real& v : *t.buf_) v = value;
    return t;
}

Tensor Tensor::from(Shape shape, std::vector<real> values) {
    for (int64_t d : shape) check(d > 0, "tensor extents must be positive, got " + shape_str(shape));
    check(numel(shape) == static_cast<int64_t>(values.size()),
          "value count " + std::to_string(values.size()) + " does not match shape " + shape_str(shape));
    Tensor t;
    t.shape_ = std::move(shape);
    t.buf_ = std::make_shared<std::vector<real>>(std::move(values));
    return t;
}

Tensor Tensor::scalar(real value) {
    return from({1}, {value});
}

real Tensor::item() const {
    check(defined() && size() == 1, "item() requires a defined single-element tensor");
    return (*buf_)[0];
}

bool Tensor::all_finite() const {
    if (!buf_) return false;
    for (real v : *buf_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

Tensor Tensor::detached() const {
    Tensor t = *this;
    t.tape_ = nullptr;
    t.id_ = -1;
    return t;
}

Tensor Tensor::clone() const {
    Tensor t;
    t.shape_ = shape_;
    if (buf_) t.buf_ = std::make_shared<std::vector<real>>(*buf_);
    return t;
}

}  // namespace primcomp
