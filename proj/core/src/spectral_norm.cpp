#include <cmath>

#include "primcomp/networks.hpp"

namespace primcomp::net {

namespace op = primcomp::ops;

namespace {

// in-place normalize; leaves the vector untouched when its norm underflows
bool normalize(std::vector<real>& x) {
    real norm2 = 0;
    for (real v : x) norm2 += v * v;
    if (norm2 < real(1e-40)) return false;
    real inv = real(1) / std::sqrt(norm2);
    for (real& v : x) v *= inv;
    return true;
}

}  // namespace

Tensor spectral_normalize(const Tensor& weight, int64_t rows, std::vector<real>& u,
                          std::vector<real>& v, bool update) {
    check(weight.defined() && rows >= 1 && weight.size() % rows == 0,
          "spectral_normalize: rows must divide the weight size");
    int64_t cols = weight.size() / rows;
    check(static_cast<int64_t>(u.size()) == rows, "power-iteration u has the wrong size");
    if (v.empty()) v.assign(static_cast<size_t>(cols), 0);
    check(static_cast<int64_t>(v.size()) == cols, "power-iteration v has the wrong size");

    if (update) {
        const real* w = weight.data();
        // v <- normalize(W^T u), u <- normalize(W v)
        std::vector<real> vt(static_cast<size_t>(cols), 0);
        for (int64_t r = 0; r < rows; ++r) {
            real ur = u[static_cast<size_t>(r)];
            const real* row = w + r * cols;
            for (int64_t c = 0; c < cols; ++c) vt[static_cast<size_t>(c)] += ur * row[c];
        }
        if (normalize(vt)) v = std::move(vt);
        std::vector<real> ut(static_cast<size_t>(rows), 0);
        for (int64_t r = 0; r < rows; ++r) {
            const real* row = w + r * cols;
            real acc = 0;
            for (int64_t c = 0; c < cols; ++c) acc += row[c] * v[static_cast<size_t>(c)];
            ut[static_cast<size_t>(r)] = acc;
        }
        if (normalize(ut)) u = std::move(ut);
    }

    Tensor w2 = op::reshape(weight, {rows, cols});
    Tensor ut = Tensor::from({rows, 1}, std::vector<real>(u.begin(), u.end()));
    Tensor vt = Tensor::from({cols, 1}, std::vector<real>(v.begin(), v.end()));
    Tensor sigma = op::sum(op::mul(ut, op::matmul(w2, vt)));
    Tensor clamped = op::max_scalar(sigma, real(1e-12));
    Tensor normalized = op::div(w2, op::reshape(clamped, {1, 1}));
    return op::reshape(normalized, weight.shape());
}

}  // namespace primcomp::net
