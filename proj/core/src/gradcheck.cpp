#include "ratex/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace ratex {

Tensor finite_difference_grad(const std::function<double(const Tensor&)>& f, const Tensor& theta,
                              double eps) {
  if (!(eps > 0.0)) throw DomainError("finite_difference_grad: eps must be > 0");
  Tensor probe = theta;
  Tensor grad(theta.shape());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double x = theta[i];
    probe[i] = x + eps;
    const double up = f(probe);
    probe[i] = x - eps;
    const double down = f(probe);
    probe[i] = x;
    grad[i] = (up - down) / (2.0 * eps);
  }
  return grad;
}

double relative_error(double a, double b, double floor) {
  const double denom = std::max({std::abs(a), std::abs(b), floor});
  return std::abs(a - b) / denom;
}

}  // namespace ratex
