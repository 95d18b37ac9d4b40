#pragma once

#include <functional>

#include "ratex/tensor.hpp"

namespace ratex {

/// Central-difference gradient of a scalar function: (f(x + eps e_i) - f(x - eps e_i)) / 2 eps.
Tensor finite_difference_grad(const std::function<double(const Tensor&)>& f, const Tensor& theta,
                              double eps = 1e-5);

/// |a - b| / max(|a|, |b|, floor). The floor keeps near-zero gradients from
/// turning rounding noise into large relative errors.
double relative_error(double a, double b, double floor = 1e-6);

}  // namespace ratex
