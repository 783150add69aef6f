#include <algorithm>
#include <cstring>

#include "primcomp/ops.hpp"

namespace primcomp::ops {

Tensor reshape(const Tensor& a, Shape shape) {
    check(a.defined(), "reshape on undefined tensor");
    check(numel(shape) == a.size(),
          "reshape " + shape_str(a.shape()) + " -> " + shape_str(shape) + " changes element count");
    Tensor out = Tensor::from(shape, std::vector<real>(a.data(), a.data() + a.size()));
    Tape* tape = common_tape({&a});
    if (!tape) return out;
    int64_t n = a.size();
    return tape->record1({a}, std::move(out), [n](Tape::BackwardCtx& ctx) {
        auto g = ctx.out_adjoint(0);
        if (g.empty() || !ctx.input_on_tape(0)) return;
        auto ga = ctx.input_adjoint(0);
        for (int64_t i = 0; i < n; ++i) ga[i] += g[i];
    });
}

Tensor slice0(const Tensor& a, int64_t begin, int64_t end) {
    check(a.defined() && a.rank() >= 1, "slice0 requires rank >= 1");
    int64_t d0 = a.dim(0);
    check(0 <= begin && begin < end && end <= d0,
          "slice0 range [" + std::to_string(begin) + ", " + std::to_string(end) +
              ") invalid for extent " + std::to_string(d0));
    int64_t inner = a.size() / d0;
    Shape out_shape = a.shape();
    out_shape[0] = end - begin;
    Tensor out = Tensor::zeros(out_shape);
    std::memcpy(out.data(), a.data() + begin * inner, sizeof(real) * static_cast<size_t>((end - begin) * inner));

    Tape* tape = common_tape({&a});
    if (!tape) return out;
    int64_t offset = begin * inner;
    int64_t count = (end - begin) * inner;
    return tape->record1({a}, std::move(out), [offset, count](Tape::BackwardCtx& ctx) {
        auto g = ctx.out_adjoint(0);
        if (g.empty() || !ctx.input_on_tape(0)) return;
        auto ga = ctx.input_adjoint(0);
        for (int64_t i = 0; i < count; ++i) ga[offset + i] += g[i];
    });
}

Tensor concat0(std::span<const Tensor> parts) {
    check(!parts.empty(), "concat0 needs at least one tensor");
    Shape tail(parts[0].shape().begin() + 1, parts[0].shape().end());
    int64_t d0 = 0;
    for (const Tensor& p : parts) {
        check(p.rank() == parts[0].rank(), "concat0 rank mismatch");
        Shape ptail(p.shape().begin() + 1, p.shape().end());
        check(ptail == tail, "concat0 trailing shape mismatch: " + shape_str(p.shape()) +
                                 " vs " + shape_str(parts[0].shape()));
        d0 += p.dim(0);
    }
    Shape out_shape = parts[0].shape();
    out_shape[0] = d0;
    Tensor out = Tensor::zeros(out_shape);
    real* po = out.data();
    std::vector<int64_t> sizes;
    for (const Tensor& p : parts) {
        std::memcpy(po, p.data(), sizeof(real) * static_cast<size_t>(p.size()));
        po += p.size();
        sizes.push_back(p.size());
    }

    Tape* tape = nullptr;
    for (const Tensor& p : parts) {
        Tape* t = common_tape({&p});
        if (t) {
            check(!tape || tape == t, "concat0 operands on different tapes");
            tape = t;
        }
    }
    if (!tape) return out;
    std::vector<Tensor> inputs(parts.begin(), parts.end());
    return tape->record1(std::move(inputs), std::move(out), [sizes](Tape::BackwardCtx& ctx) {
        auto g = ctx.out_adjoint(0);
        if (g.empty()) return;
        int64_t offset = 0;
        for (size_t k = 0; k < sizes.size(); ++k) {
            if (ctx.input_on_tape(k)) {
                auto gk = ctx.input_adjoint(k);
                for (int64_t i = 0; i < sizes[k]; ++i) gk[i] += g[offset + i];
            }
            offset += sizes[k];
        }
    });
}

Tensor stack_last2(const Tensor& a, const Tensor& b) {
    check(a.defined() && b.defined() && a.shape() == b.shape(),
          "stack_last2 requires equal shapes");
    Shape out_shape = a.shape();
    out_shape.push_back(2);
    Tensor out = Tensor::zeros(out_shape);
    const real* pa = a.data();
    const real* pb = b.data();
    real* po = out.data();
    int64_t n = a.size();
    for (int64_t i = 0; i < n; ++i) {
        po[2 * i] = pa[i];
        po[2 * i + 1] = pb[i];
    }
    Tape* tape = common_tape({&a, &b});
    if (!tape) return out;
    return tape->record1({a, b}, std::move(out), [n](Tape::BackwardCtx& ctx) {
        auto g = ctx.out_adjoint(0);
        if (g.empty()) return;
        if (ctx.input_on_tape(0)) {
            auto ga = ctx.input_adjoint(0);
            for (int64_t i = 0; i < n; ++i) ga[i] += g[2 * i];
        }
        if (ctx.input_on_tape(1)) {
            auto gb = ctx.input_adjoint(1);
            for (int64_t i = 0; i < n; ++i) gb[i] += g[2 * i + 1];
        }
    });
}

}  // namespace primcomp::ops
