#pragma once

#include "primcomp/tensor.hpp"

namespace primcomp::oracles {

// Exact top singular value of a weight viewed as a (rows, size/rows) matrix,
// via a cyclic Jacobi eigendecomposition of the smaller Gram matrix.
// Independent of the power-iteration path it is used to check.
real top_singular_value(const Tensor& weight, int64_t rows);

}  // namespace primcomp::oracles
