#include "primcomp/ops.hpp"

namespace primcomp::ops {

namespace {

// C(m,n) += op_a(A) * op_b(B) with logical dims m,k,n after transposes.
void matmul_accumulate(const real* a, const real* b, real* c, int64_t m, int64_t k, int64_t n,
                       bool ta, bool tb) {
    if (!ta && !tb) {
        for (int64_t i = 0; i < m; ++i) {
            const real* arow = a + i * k;
            real* crow = c + i * n;
            for (int64_t l = 0; l < k; ++l) {
                real av = arow[l];
                const real* brow = b + l * n;
                for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
            }
        }
    } else if (!ta && tb) {
        for (int64_t i = 0; i < m; ++i) {
            const real* arow = a + i * k;
            real* crow = c + i * n;
            for (int64_t j = 0; j < n; ++j) {
                const real* brow = b + j * k;
                real acc = 0;
                for (int64_t l = 0; l < k; ++l) acc += arow[l] * brow[l];
                crow[j] += acc;
            }
        }
    } else if (ta && !tb) {
        for (int64_t l = 0; l < k; ++l) {
            const real* arow = a + l * m;
            const real* brow = b + l * n;
            for (int64_t i = 0; i < m; ++i) {
                real av = arow[i];
                real* crow = c + i * n;
                for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
            }
        }
    } else {
        for (int64_t j = 0; j < n; ++j) {
            const real* brow = b + j * k;
            for (int64_t l = 0; l < k; ++l) {
                real bv = brow[l];
                const real* arow = a + l * m;
                for (int64_t i = 0; i < m; ++i) c[i * n + j] += arow[i] * bv;
            }
        }
    }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b, bool trans_a, bool trans_b) {
    check(a.defined() && b.defined(), "matmul on undefined tensor");
    check(a.rank() == 2 && b.rank() == 2,
          "matmul requires rank-2 tensors, got " + shape_str(a.shape()) + " and " + shape_str(b.shape()));
    int64_t m = trans_a ? a.dim(1) : a.dim(0);
    int64_t ka = trans_a ? a.dim(0) : a.dim(1);
    int64_t kb = trans_b ? b.dim(1) : b.dim(0);
    int64_t n = trans_b ? b.dim(0) : b.dim(1);
    check(ka == kb, "matmul inner dimensions disagree: " + shape_str(a.shape()) +
                        (trans_a ? "^T" : "") + " * " + shape_str(b.shape()) + (trans_b ? "^T" : ""));

    Tensor out = Tensor::zeros({m, n});
    matmul_accumulate(a.data(), b.data(), out.data(), m, ka, n, trans_a, trans_b);

    Tape* tape = common_tape({&a, &b});
    if (!tape) return out;
    Tensor sa = a.detached(), sb = b.detached();
    int64_t k = ka;
    return tape->record1({a, b}, std::move(out),
                         [sa, sb, m, n, k, trans_a, trans_b](Tape::BackwardCtx& ctx) {
        auto g = ctx.out_adjoint(0);
        if (g.empty()) return;
        const real* pg = g.data();
        if (ctx.input_on_tape(0)) {
            auto ga = ctx.input_adjoint(0);
            if (!trans_a) {
                // dA = g * B'^T
                matmul_accumulate(pg, sb.data(), ga.data(), m, n, k, false, !trans_b);
            } else {
                // dA = B' * g^T
                matmul_accumulate(sb.data(), pg, ga.data(), k, n, m, trans_b, true);
            }
        }
        if (ctx.input_on_tape(1)) {
            auto gb = ctx.input_adjoint(1);
            if (!trans_b) {
                // dB = A'^T * g
                matmul_accumulate(sa.data(), pg, gb.data(), k, m, n, !trans_a, false);
            } else {
                // dB = g^T * A'
                matmul_accumulate(pg, sa.data(), gb.data(), n, m, k, true, trans_a);
            }
        }
    });
}

}  // namespace primcomp::ops
