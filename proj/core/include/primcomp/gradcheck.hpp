#pragma once

#include <functional>
#include <span>

#include "primcomp/ops.hpp"

namespace primcomp {

// Scalar-valued function under test: receives leafed copies of the inputs on
// a fresh tape and must return a scalar recorded on that tape.
using ScalarFn = std::function<Tensor(Tape&, std::span<const Tensor>)>;

struct GradcheckResult {
    real max_rel_error = 0;
    size_t worst_input = 0;
    int64_t worst_element = 0;
    real worst_analytic = 0;
    real worst_numeric = 0;
};

// Central finite differences (f(x+eps) - f(x-eps)) / (2 eps) per element,
// compared against one reverse-mode pass. The relative error metric is
// |a - n| / max(1, |a|, |n|).
GradcheckResult gradcheck(const ScalarFn& f, std::span<const Tensor> inputs, real eps = real(1e-5));

}  // namespace primcomp
