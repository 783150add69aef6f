#include "oracles.hpp"

#include <cmath>
#include <vector>

namespace primcomp::oracles {

namespace {

// cyclic Jacobi on a symmetric matrix; returns the largest eigenvalue
real jacobi_max_eigenvalue(std::vector<real> a, int64_t n) {
    auto at = [&](int64_t i, int64_t j) -> real& { return a[i * n + j]; };
    for (int sweep = 0; sweep < 100; ++sweep) {
        real off = 0;
        for (int64_t i = 0; i < n; ++i) {
            for (int64_t j = i + 1; j < n; ++j) off += std::abs(at(i, j));
        }
        if (off < real(1e-14) * std::max<real>(1, std::abs(at(0, 0)))) break;
        for (int64_t p = 0; p < n; ++p) {
            for (int64_t q = p + 1; q < n; ++q) {
                real apq = at(p, q);
                if (std::abs(apq) < real(1e-300)) continue;
                real theta = (at(q, q) - at(p, p)) / (2 * apq);
                real t = (theta >= 0 ? real(1) : real(-1)) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1));
                real c = real(1) / std::sqrt(t * t + 1);
                real s = t * c;
                for (int64_t k = 0; k < n; ++k) {
                    real akp = at(k, p), akq = at(k, q);
                    at(k, p) = c * akp - s * akq;
                    at(k, q) = s * akp + c * akq;
                }
                for (int64_t k = 0; k < n; ++k) {
                    real apk = at(p, k), aqk = at(q, k);
                    at(p, k) = c * apk - s * aqk;
                    at(q, k) = s * apk + c * aqk;
                }
            }
        }
    }
    real best = at(0, 0);
    for (int64_t i = 1; i < n; ++i) best = std::max(best, at(i, i));
    return best;
}

}  // namespace

real top_singular_value(const Tensor& weight, int64_t rows) {
    int64_t cols = weight.size() / rows;
    int64_t n = std::min(rows, cols);
    const real* w = weight.data();
    // Gram matrix of the smaller side; same nonzero spectrum either way
    std::vector<real> gram(static_cast<size_t>(n) * n, 0);
    if (rows <= cols) {
        for (int64_t i = 0; i < rows; ++i) {
            for (int64_t j = i; j < rows; ++j) {
                real acc = 0;
                for (int64_t k = 0; k < cols; ++k) acc += w[i * cols + k] * w[j * cols + k];
                gram[i * n + j] = acc;
                gram[j * n + i] = acc;
            }
        }
    } else {
        for (int64_t i = 0; i < cols; ++i) {
            for (int64_t j = i; j < cols; ++j) {
                real acc = 0;
                for (int64_t k = 0; k < rows; ++k) acc += w[k * cols + i] * w[k * cols + j];
                gram[i * n + j] = acc;
                gram[j * n + i] = acc;
            }
        }
    }
    real lambda = jacobi_max_eigenvalue(std::move(gram), n);
    return lambda > 0 ? std::sqrt(lambda) : 0;
}

}  // namespace primcomp::oracles
