#include <cmath>

#include "primcomp/ops.hpp"

namespace primcomp::ops {

namespace {

// Trailing-dimension broadcasting plan between two shapes.
struct BroadcastPlan {
    Shape out_shape;
    int64_t n = 0;
    // per-output-dimension element strides; 0 marks a broadcast dimension
    std::vector<int64_t> stride_a, stride_b;
    bool same_shape = false;
};

BroadcastPlan make_plan(const Shape& a, const Shape& b) {
    BroadcastPlan plan;
    size_t rank = std::max(a.size(), b.size());
    plan.out_shape.resize(rank);
    plan.stride_a.resize(rank);
    plan.stride_b.resize(rank);

    // contiguous strides of the operands
    std::vector<int64_t> sa(a.size()), sb(b.size());
    int64_t acc = 1;
    for (size_t i = a.size(); i-- > 0;) {
        sa[i] = acc;
        acc *= a[i];
    }
    acc = 1;
    for (size_t i = b.size(); i-- > 0;) {
        sb[i] = acc;
        acc *= b[i];
    }

    for (size_t i = 0; i < rank; ++i) {
        size_t oi = rank - 1 - i;
        int64_t da = i < a.size() ? a[a.size() - 1 - i] : 1;
        int64_t db = i < b.size() ? b[b.size() - 1 - i] : 1;
        if (da != db && da != 1 && db != 1) {
            fail_invalid("shapes are not broadcast-compatible: " + shape_str(a) + " vs " + shape_str(b));
        }
        plan.out_shape[oi] = std::max(da, db);
        plan.stride_a[oi] = (da == 1 && plan.out_shape[oi] != 1) ? 0 : (i < a.size() ? sa[a.size() - 1 - i] : 0);
        plan.stride_b[oi] = (db == 1 && plan.out_shape[oi] != 1) ? 0 : (i < b.size() ? sb[b.size() - 1 - i] : 0);
    }
    plan.n = numel(plan.out_shape);
    plan.same_shape = (a == b);
    return plan;
}

// Calls fn(out_index, a_index, b_index) for every output element.
template <typename Fn>
void for_each_broadcast(const BroadcastPlan& plan, Fn&& fn) {
    if (plan.same_shape) {
        for (int64_t i = 0; i < plan.n; ++i) fn(i, i, i);
        return;
    }
    size_t rank = plan.out_shape.size();
    std::vector<int64_t> idx(rank, 0);
    int64_t ia = 0, ib = 0;
    for (int64_t i = 0; i < plan.n; ++i) {
        fn(i, ia, ib);
        for (size_t d = rank; d-- > 0;) {
            idx[d]++;
            ia += plan.stride_a[d];
            ib += plan.stride_b[d];
            if (idx[d] < plan.out_shape[d]) break;
            ia -= plan.stride_a[d] * plan.out_shape[d];
            ib -= plan.stride_b[d] * plan.out_shape[d];
            idx[d] = 0;
        }
    }
}

// df(a_val, b_val, out_val) -> (dout/da, dout/db)
template <typename FwdFn, typename GradFn>
Tensor binary_op(const Tensor& a, const Tensor& b, FwdFn fwd, GradFn grad) {
    check(a.defined() && b.defined(), "binary op on undefined tensor");
    BroadcastPlan plan = make_plan(a.shape(), b.shape());
    Tensor out = Tensor::zeros(plan.out_shape);
    const real* pa = a.data();
    const real* pb = b.data();
    real* po = out.data();
    for_each_broadcast(plan, [&](int64_t i, int64_t ia, int64_t ib) { po[i] = fwd(pa[ia], pb[ib]); });

    Tape* tape = common_tape({&a, &b});
    if (!tape) return out;
    Tensor saved_a = a.detached(), saved_b = b.detached(), saved_out = out;
    return tape->record1({a, b}, std::move(out), [plan, saved_a, saved_b, saved_out, grad](Tape::BackwardCtx& ctx) {
        auto g = ctx.out_adjoint(0);
        if (g.empty()) return;
        const real* pa = saved_a.data();
        const real* pb = saved_b.data();
        const real* po = saved_out.data();
        bool need_a = ctx.input_on_tape(0);
        bool need_b = ctx.input_on_tape(1);
        std::span<real> ga = need_a ? ctx.input_adjoint(0) : std::span<real>{};
        std::span<real> gb = need_b ? ctx.input_adjoint(1) : std::span<real>{};
        for_each_broadcast(plan, [&](int64_t i, int64_t ia, int64_t ib) {
            auto [da, db] = grad(pa[ia], pb[ib], po[i]);
            if (need_a) ga[ia] += da * g[i];
            if (need_b) gb[ib] += db * g[i];
        });
    });
}

// dfn(a_val, out_val) -> dout/da
template <typename FwdFn, typename GradFn>
Tensor unary_op(const Tensor& a, FwdFn fwd, GradFn grad) {
    check(a.defined(), "unary op on undefined tensor");
    Tensor out = Tensor::zeros(a.shape());
    const real* pa = a.data();
    real* po = out.data();
    int64_t n = a.size();
    for (int64_t i = 0; i < n; ++i) po[i] = fwd(pa[i]);

    Tape* tape = common_tape({&a});
    if (!tape) return out;
    Tensor saved_a = a.detached(), saved_out = out;
    return tape->record1({a}, std::move(out), [saved_a, saved_out, grad, n](Tape::BackwardCtx& ctx) {
        auto g = ctx.out_adjoint(0);
        if (g.empty() || !ctx.input_on_tape(0)) return;
        auto ga = ctx.input_adjoint(0);
        const real* pa = saved_a.data();
        const real* po = saved_out.data();
        for (int64_t i = 0; i < n; ++i) ga[i] += grad(pa[i], po[i]) * g[i];
    });
}

inline real stable_sigmoid(real x) {
    if (x >= 0) {
        return real(1) / (real(1) + std::exp(-x));
    }
    real e = std::exp(x);
    return e / (real(1) + e);
}

inline real stable_softplus(real x) {
    return std::max(x, real(0)) + std::log1p(std::exp(-std::abs(x)));
}

struct GradPair {
    real da, db;
};

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    return binary_op(
        a, b, [](real x, real y) { return x + y; },
        [](real, real, real) { return GradPair{1, 1}; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    return binary_op(
        a, b, [](real x, real y) { return x - y; },
        [](real, real, real) { return GradPair{1, -1}; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    return binary_op(
        a, b, [](real x, real y) { return x * y; },
        [](real x, real y, real) { return GradPair{y, x}; });
}

Tensor div(const Tensor& a, const Tensor& b) {
    return binary_op(
        a, b, [](real x, real y) { return x / y; },
        [](real, real y, real o) { return GradPair{real(1) / y, -o / y}; });
}

Tensor neg(const Tensor& a) {
    return unary_op(a, [](real x) { return -x; }, [](real, real) { return real(-1); });
}

Tensor exp(const Tensor& a) {
    return unary_op(a, [](real x) { return std::exp(x); }, [](real, real o) { return o; });
}

Tensor log(const Tensor& a) {
    return unary_op(a, [](real x) { return std::log(x); }, [](real x, real) { return real(1) / x; });
}

Tensor sqrt(const Tensor& a) {
    return unary_op(a, [](real x) { return std::sqrt(x); },
                    [](real, real o) { return real(0.5) / o; });
}

Tensor abs(const Tensor& a) {
    return unary_op(a, [](real x) { return std::abs(x); },
                    [](real x, real) { return x > 0 ? real(1) : (x < 0 ? real(-1) : real(0)); });
}

Tensor square(const Tensor& a) {
    return unary_op(a, [](real x) { return x * x; }, [](real x, real) { return 2 * x; });
}

Tensor sigmoid(const Tensor& a) {
    return unary_op(a, [](real x) { return stable_sigmoid(x); },
                    [](real, real o) { return o * (real(1) - o); });
}

Tensor tanh(const Tensor& a) {
    return unary_op(a, [](real x) { return std::tanh(x); },
                    [](real, real o) { return real(1) - o * o; });
}

Tensor softplus(const Tensor& a) {
    return unary_op(a, [](real x) { return stable_softplus(x); },
                    [](real x, real) { return stable_sigmoid(x); });
}

Tensor leaky_relu(const Tensor& a, real slope) {
    return unary_op(
        a, [slope](real x) { return x > 0 ? x : slope * x; },
        [slope](real x, real) { return x > 0 ? real(1) : slope; });
}

Tensor add_scalar(const Tensor& a, real s) {
    return unary_op(a, [s](real x) { return x + s; }, [](real, real) { return real(1); });
}

Tensor mul_scalar(const Tensor& a, real s) {
    return unary_op(a, [s](real x) { return x * s; }, [s](real, real) { return s; });
}

Tensor max_scalar(const Tensor& a, real floor) {
    return unary_op(
        a, [floor](real x) { return std::max(x, floor); },
        [floor](real x, real) { return x > floor ? real(1) : real(0); });
}

Tensor clamp(const Tensor& a, real lo, real hi) {
    check(lo <= hi, "clamp requires lo <= hi");
    return unary_op(
        a, [lo, hi](real x) { return std::min(std::max(x, lo), hi); },
        [lo, hi](real x, real) { return (x > lo && x < hi) ? real(1) : real(0); });
}

Tensor where_positive(const Tensor& cond, const Tensor& a, const Tensor& b) {
    check(cond.shape() == a.shape() && a.shape() == b.shape(),
          "where_positive requires equal shapes: " + shape_str(cond.shape()) + ", " +
              shape_str(a.shape()) + ", " + shape_str(b.shape()));
    Tensor out = Tensor::zeros(a.shape());
    const real* pc = cond.data();
    const real* pa = a.data();
    const real* pb = b.data();
    real* po = out.data();
    int64_t n = a.size();
    for (int64_t i = 0; i < n; ++i) po[i] = pc[i] > 0 ? pa[i] : pb[i];

    Tape* tape = common_tape({&a, &b});
    if (!tape) return out;
    Tensor saved_c = cond.detached();
    // cond participates as a plain constant; it is intentionally not an input
    return tape->record1({a, b}, std::move(out), [saved_c, n](Tape::BackwardCtx& ctx) {
        auto g = ctx.out_adjoint(0);
        if (g.empty()) return;
        const real* pc = saved_c.data();
        if (ctx.input_on_tape(0)) {
            auto ga = ctx.input_adjoint(0);
            for (int64_t i = 0; i < n; ++i) {
                if (pc[i] > 0) ga[i] += g[i];
            }
        }
        if (ctx.input_on_tape(1)) {
            auto gb = ctx.input_adjoint(1);
            for (int64_t i = 0; i < n; ++i) {
                if (pc[i] <= 0) gb[i] += g[i];
            }
        }
    });
}

}  // namespace primcomp::ops
