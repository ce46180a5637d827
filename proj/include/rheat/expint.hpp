#pragma once

#include <cmath>
#include <stdexcept>

namespace rheat {

/// Moments of the decayed-exponential kernel,
///   G_j(lambda, tau) = int_0^tau e^{-lambda (tau - v)} v^j dv,   j <= 3.
/// Series near lambda*tau = 0, cancellation-free closed forms otherwise.
/// These make exponential integrators exact on piecewise-polynomial data.
inline double exp_poly_moment(int j, double lambda, double tau) {
  if (j < 0 || j > 3) throw std::invalid_argument("exp_poly_moment: j must be 0..3");
  if (lambda < 0) throw std::invalid_argument("exp_poly_moment: lambda must be >= 0");
  if (tau < 0) throw std::invalid_argument("exp_poly_moment: tau must be >= 0");
  const double z = lambda * tau;
  if (z < 1.0) {
    // G_j = tau^{j+1} sum_m (-z)^m j! / (j+m+1)!
    double term = 1.0 / (j + 1);
    double sum = term;
    for (int m = 1; m < 64; ++m) {
      term *= -z / (j + m + 1);
      sum += term;
      if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    }
    return std::pow(tau, j + 1) * sum;
  }
  const double E = std::exp(-z);
  switch (j) {
    case 0:
      return (1.0 - E) / lambda;
    case 1:
      return (z - 1.0 + E) / (lambda * lambda);
    case 2:
      return (z * z - 2.0 * z + 2.0 - 2.0 * E) / (lambda * lambda * lambda);
    default:
      return (z * z * z - 3.0 * z * z + 6.0 * z - 6.0 + 6.0 * E) /
             (lambda * lambda * lambda * lambda);
  }
}

}  // namespace rheat
