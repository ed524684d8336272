#pragma once

// Central finite-difference oracle. Works on f64 tensors only and knows
// nothing about how the analytic gradients are produced.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <sstream>
#include <string>

#include "leafnet/rng.hpp"
#include "leafnet/tensor.hpp"

namespace leafnet::testing {

inline constexpr double grad_rel_tol = 1e-3;
inline constexpr double grad_abs_tol = 1e-6;

inline bool grad_close(double analytic, double numeric) {
    const double diff = std::abs(analytic - numeric);
    if (diff <= grad_abs_tol) {
        return true;
    }
    return diff / std::max(std::abs(analytic), std::abs(numeric)) <= grad_rel_tol;
}

struct GradReport {
    std::size_t checked = 0;
    std::size_t failures = 0;
    std::string first_failure;

    bool ok() const { return checked > 0 && failures == 0; }
};

/// Perturbs every element of `x` by +/-eps and compares (f(x+) - f(x-)) / 2eps
/// against `analytic`. `x` is restored afterwards.
inline void check_gradient(const std::string& what, TensorD& x, const TensorD& analytic,
                           const std::function<double()>& f, double eps, GradReport& report) {
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double saved = x[i];
        x[i] = saved + eps;
        const double up = f();
        x[i] = saved - eps;
        const double down = f();
        x[i] = saved;
        const double numeric = (up - down) / (2.0 * eps);
        ++report.checked;
        if (!grad_close(analytic[i], numeric)) {
            if (report.failures == 0) {
                std::ostringstream s;
                s << what << "[" << i << "]: analytic " << analytic[i] << " vs numeric " << numeric;
                report.first_failure = s.str();
            }
            ++report.failures;
        }
    }
}

inline TensorD random_tensor(const Shape& shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    TensorD t(shape);
    for (double& v : t.data()) {
        v = rng.uniform(lo, hi);
    }
    return t;
}

inline double weighted_sum(const TensorD& y, const TensorD& weights) {
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        s += y[i] * weights[i];
    }
    return s;
}

}  // namespace leafnet::testing
