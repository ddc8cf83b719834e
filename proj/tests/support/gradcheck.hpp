#pragma once

// Central finite-difference gradient checking shared by the unit and
// acceptance suites. Independent of the tape's backward pass: it only
// re-runs the forward closure at perturbed parameter values.

#include <cmath>
#include <functional>
#include <vector>

#include "fsoda/core/tape.hpp"
#include "fsoda/core/tensor.hpp"

namespace fsoda::testing {

/// Numerical d(loss)/d(p) by central differences; `loss_value` must read
/// p.value fresh on every call.
inline Tensor finite_diff_grad(Param& p, const std::function<double()>& loss_value, double h = 1e-6) {
    Tensor g(p.value.rows(), p.value.cols());
    for (size_t i = 0; i < p.value.size(); ++i) {
        const double saved = p.value[i];
        p.value[i] = saved + h;
        const double fp = loss_value();
        p.value[i] = saved - h;
        const double fm = loss_value();
        p.value[i] = saved;
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

/// Max relative error between analytic and numerical gradients.
/// Entries where both are tiny are compared absolutely against `floor`.
inline double max_rel_error(const Tensor& analytic, const Tensor& numeric, double floor = 1e-7) {
    double worst = 0.0;
    for (size_t i = 0; i < analytic.size(); ++i) {
        const double a = analytic[i];
        const double n = numeric[i];
        const double denom = std::max({std::fabs(a), std::fabs(n), 1.0});
        double err = std::fabs(a - n) / denom;
        if (std::fabs(a) < floor && std::fabs(n) < floor) err = 0.0;
        worst = std::max(worst, err);
    }
    return worst;
}

/// Builds the loss graph via `build`, backprops, and compares every listed
/// param's gradient against central differences. Returns the worst relative
/// error over all params.
inline double check_gradients(std::vector<Param*> params, const std::function<Var(Tape&)>& build, double h = 1e-6) {
    for (Param* p : params) p->zero_grad();
    Tape tape;
    Var loss = build(tape);
    tape.backward(loss);

    auto eval = [&]() {
        Tape t2;
        return t2.value(build(t2))(0, 0);
    };

    double worst = 0.0;
    for (Param* p : params) {
        const Tensor analytic = p->grad;
        const Tensor numeric = finite_diff_grad(*p, eval, h);
        worst = std::max(worst, max_rel_error(analytic, numeric));
    }
    return worst;
}

}  // namespace fsoda::testing
