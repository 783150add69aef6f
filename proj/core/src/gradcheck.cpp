#include "primcomp/gradcheck.hpp"

#include <cmath>

namespace primcomp {

namespace {

real eval_scalar(const ScalarFn& f, std::span<const Tensor> inputs) {
    Tape tape;
    std::vector<Tensor> leafed;
    leafed.reserve(inputs.size());
    for (const Tensor& t : inputs) leafed.push_back(tape.leaf(t));
    Tensor out = f(tape, leafed);
    check(out.defined() && out.size() == 1, "gradcheck function must return a scalar");
    return out.item();
}

}  // namespace

GradcheckResult gradcheck(const ScalarFn& f, std::span<const Tensor> inputs, real eps) {
    check(eps > 0, "gradcheck eps must be positive");

    // Analytic pass.
    Tape tape;
    std::vector<Tensor> leafed;
    leafed.reserve(inputs.size());
    for (const Tensor& t : inputs) leafed.push_back(tape.leaf(t.clone()));
    Tensor loss = f(tape, leafed);
    check(loss.defined() && loss.size() == 1, "gradcheck function must return a scalar");
    GradStore grads = tape.backward(loss);

    GradcheckResult result;
    std::vector<Tensor> work;
    work.reserve(inputs.size());
    for (const Tensor& t : inputs) work.push_back(t.clone());

    for (size_t k = 0; k < inputs.size(); ++k) {
        Tensor analytic = grads.grad(leafed[k]);  // undefined => unreachable => zero gradient
        real* xs = work[k].data();
        for (int64_t i = 0; i < work[k].size(); ++i) {
            real saved = xs[i];
            xs[i] = saved + eps;
            real fp = eval_scalar(f, work);
            xs[i] = saved - eps;
            real fm = eval_scalar(f, work);
            xs[i] = saved;
            real numeric = (fp - fm) / (2 * eps);
            real a = analytic.defined() ? analytic.at(i) : real(0);
            real denom = std::max(real(1), std::max(std::abs(a), std::abs(numeric)));
            real err = std::abs(a - numeric) / denom;
            if (err > result.max_rel_error) {
                result.max_rel_error = err;
                result.worst_input = k;
                result.worst_element = i;
                result.worst_analytic = a;
                result.worst_numeric = numeric;
            }
        }
    }
    return result;
}

}  // namespace primcomp
