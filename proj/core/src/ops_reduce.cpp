#include <algorithm>
#include <cmath>

#include "primcomp/ops.hpp"

namespace primcomp::ops {

namespace {

// Maps each input element to its output slot for a reduction over `axes`.
struct ReducePlan {
    Shape out_shape;          // reduced dims removed (scalar shape {1} if empty)
    std::vector<char> is_reduced;
    int64_t in_n = 0;
    int64_t out_n = 0;
    std::vector<int64_t> out_stride;  // per input dimension, 0 on reduced dims
    Shape in_shape;
};

ReducePlan make_plan(const Shape& in, std::span<const int64_t> axes) {
    ReducePlan plan;
    plan.in_shape = in;
    plan.in_n = numel(in);
    plan.is_reduced.assign(in.size(), 0);
    for (int64_t ax : axes) {
        check(ax >= 0 && ax < static_cast<int64_t>(in.size()),
              "reduction axis " + std::to_string(ax) + " invalid for shape " + shape_str(in));
        check(!plan.is_reduced[static_cast<size_t>(ax)], "duplicate reduction axis " + std::to_string(ax));
        plan.is_reduced[static_cast<size_t>(ax)] = 1;
    }
    for (size_t i = 0; i < in.size(); ++i) {
        if (!plan.is_reduced[i]) plan.out_shape.push_back(in[i]);
    }
    if (plan.out_shape.empty()) plan.out_shape = {1};
    plan.out_n = numel(plan.out_shape);

    plan.out_stride.assign(in.size(), 0);
    int64_t acc = 1;
    for (size_t i = in.size(); i-- > 0;) {
        if (!plan.is_reduced[i]) {
            plan.out_stride[i] = acc;
            acc *= in[i];
        }
    }
    return plan;
}

template <typename Fn>
void for_each(const ReducePlan& plan, Fn&& fn) {
    size_t rank = plan.in_shape.size();
    std::vector<int64_t> idx(rank, 0);
    int64_t out = 0;
    for (int64_t i = 0; i < plan.in_n; ++i) {
        fn(i, out);
        for (size_t d = rank; d-- > 0;) {
            idx[d]++;
            out += plan.out_stride[d];
            if (idx[d] < plan.in_shape[d]) break;
            out -= plan.out_stride[d] * plan.in_shape[d];
            idx[d] = 0;
        }
    }
}

enum class Kind { Sum, Mean, L1 };

Tensor reduce_impl(const Tensor& a, std::span<const int64_t> axes, Kind kind) {
    check(a.defined(), "reduction on undefined tensor");
    ReducePlan plan = make_plan(a.shape(), axes);
    int64_t group = plan.in_n / plan.out_n;
    real scale = kind == Kind::Mean ? real(1) / static_cast<real>(group) : real(1);

    Tensor out = Tensor::zeros(plan.out_shape);
    const real* pa = a.data();
    real* po = out.data();
    if (kind == Kind::L1) {
        for_each(plan, [&](int64_t i, int64_t o) { po[o] += std::abs(pa[i]); });
    } else {
        for_each(plan, [&](int64_t i, int64_t o) { po[o] += pa[i]; });
    }
    if (kind == Kind::Mean) {
        for (int64_t o = 0; o < plan.out_n; ++o) po[o] *= scale;
    }

    Tape* tape = common_tape({&a});
    if (!tape) return out;
    Tensor saved_a = a.detached();
    return tape->record1({a}, std::move(out), [plan, saved_a, kind, scale](Tape::BackwardCtx& ctx) {
        auto g = ctx.out_adjoint(0);
        if (g.empty() || !ctx.input_on_tape(0)) return;
        auto ga = ctx.input_adjoint(0);
        const real* pa = saved_a.data();
        switch (kind) {
            case Kind::Sum:
                for_each(plan, [&](int64_t i, int64_t o) { ga[i] += g[o]; });
                break;
            case Kind::Mean:
                for_each(plan, [&](int64_t i, int64_t o) { ga[i] += g[o] * scale; });
                break;
            case Kind::L1:
                // subgradient with sign(0) := 0
                for_each(plan, [&](int64_t i, int64_t o) {
                    real s = pa[i] > 0 ? real(1) : (pa[i] < 0 ? real(-1) : real(0));
                    ga[i] += g[o] * s;
                });
                break;
        }
    });
}

std::vector<int64_t> all_axes(const Tensor& a) {
    std::vector<int64_t> axes(static_cast<size_t>(a.rank()));
    for (size_t i = 0; i < axes.size(); ++i) axes[i] = static_cast<int64_t>(i);
    return axes;
}

}  // namespace

Tensor sum(const Tensor& a) {
    auto axes = all_axes(a);
    return reduce_impl(a, axes, Kind::Sum);
}

Tensor sum(const Tensor& a, std::span<const int64_t> axes) {
    return reduce_impl(a, axes, Kind::Sum);
}

Tensor mean(const Tensor& a) {
    auto axes = all_axes(a);
    return reduce_impl(a, axes, Kind::Mean);
}

Tensor mean(const Tensor& a, std::span<const int64_t> axes) {
    return reduce_impl(a, axes, Kind::Mean);
}

Tensor l1norm(const Tensor& a) {
    auto axes = all_axes(a);
    return reduce_impl(a, axes, Kind::L1);
}

}  // namespace primcomp::ops
