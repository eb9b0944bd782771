#pragma once
#include <cmath>
#include <functional>
#include <vector>

#include "honet/tensor.hpp"

namespace honet::testing {

// Central finite differences over every element of every parameter, compared
// against the analytic gradients already accumulated in the tensors.
// Relative error uses max(|analytic|, |fd|, floor) as denominator; the floor
// keeps near-zero gradients measured at FD noise level instead of exploding.
inline double max_grad_rel_error(const std::function<double()>& loss_fn,
                                 std::vector<Tensor> params, double step = 1e-6,
                                 double floor = 1e-3) {
    double worst = 0.0;
    for (auto& p : params) {
        if (!p.requires_grad()) continue;
        for (std::size_t i = 0; i < p.numel(); ++i) {
            const double keep = p.data()[i];
            p.data()[i] = keep + step;
            const double up = loss_fn();
            p.data()[i] = keep - step;
            const double dn = loss_fn();
            p.data()[i] = keep;
            const double fd = (up - dn) / (2.0 * step);
            const double an = p.grad()[i];
            const double rel = std::fabs(an - fd) / std::max({std::fabs(an), std::fabs(fd), floor});
            worst = std::max(worst, rel);
        }
    }
    return worst;
}

inline bool approx(double a, double b, double tol = 1e-12) {
    return std::fabs(a - b) <= tol;
}

inline bool tensors_equal(const Tensor& a, const Tensor& b, double tol = 0.0) {
    if (a.shape() != b.shape()) return false;
    for (std::size_t i = 0; i < a.numel(); ++i)
        if (std::fabs(a.data()[i] - b.data()[i]) > tol) return false;
    return true;
}

}  // namespace honet::testing
