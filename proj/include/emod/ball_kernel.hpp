#pragma once

#include "emod/core_math.hpp"
#include "emod/quadrature.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace emod {

// m with mu = (m-1)/2; throws unless mu is a nonnegative half-integer.
inline int mu_to_m(double mu) {
  const double m = 2.0 * mu + 1.0;
  if (!(mu >= 0.0) || std::abs(m - std::round(m)) > 1e-12)
    throw std::domain_error("ball kernel: mu must be (m-1)/2 with m a positive integer");
  return static_cast<int>(std::lround(m));
}

// Rule on S^{m-1} used to integrate over the lifted variable.
inline QuadratureRule lifted_sphere_rule(int m, int exact_degree) {
  if (m < 1) throw std::domain_error("ball kernel: m must be >= 1");
  return sphere_rule(m, exact_degree);
}

// K_n^mu(x, y) = int_{S^{m-1}} K_n(<x,y> + sqrt(1-|y|^2) <x', xi>) dsigma(xi) for a
// given x' with |x|^2 + |x'|^2 = 1; the kernel K_n is the one of S^{d+m-1}.
inline double ball_kernel_Kn_mu(const SmoothedKernel& K, std::span<const double> x, std::span<const double> xprime,
                                std::span<const double> y, const QuadratureRule& circle_rule) {
  const int m = circle_rule.dim;
  if (static_cast<int>(xprime.size()) != m) throw std::invalid_argument("ball kernel: x' must have m coordinates");
  const double xy = dot(x, y);
  const double sy = std::sqrt(std::max(0.0, 1.0 - norm2(y)));
  double acc = 0.0;
  for (std::size_t q = 0; q < circle_rule.size(); ++q) {
    auto xi = circle_rule.node(q);
    acc += circle_rule.weights[q] * K(xy + sy * dot(xprime, xi));
  }
  return acc;
}

// Same with x' = (sqrt(1-|x|^2), 0, ..., 0).
inline double ball_kernel_Kn_mu(int n, int d, double mu, std::span<const double> x, std::span<const double> y,
                                const QuadratureRule& circle_rule) {
  const int m = mu_to_m(mu);
  if (circle_rule.dim != m) throw std::invalid_argument("ball kernel: circle rule must live on S^{m-1}");
  SmoothedKernel K(n, d + m);
  Point xp(m, 0.0);
  xp[0] = std::sqrt(std::max(0.0, 1.0 - norm2(x)));
  return ball_kernel_Kn_mu(K, x, xp, y, circle_rule);
}

}  // namespace emod
