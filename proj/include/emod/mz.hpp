#pragma once

#include "emod/core_math.hpp"
#include "emod/quadrature.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace emod {

// Discrete Marcinkiewicz-Zygmund sums over a maximal (delta/n)-separated set
// {omega} on S^{d-1}: with lambda_omega the measure of the Voronoi cell of omega,
//   lower = sum lambda_omega min_{c(omega, delta/n)} |f|^p,
//   upper = sum lambda_omega max_{c(omega, delta/n)} |f|^p,
// to be compared with |f|_p^p.
struct MZSums {
  double lower = 0.0;
  double upper = 0.0;
  double norm_pp = 0.0;
  std::size_t centers = 0;

  bool brackets() const { return lower <= norm_pp && norm_pp <= upper; }
  // max(|f|^p / lower, upper / |f|^p)
  double factor() const { return std::max(norm_pp / lower, upper / norm_pp); }
};

inline MZSums mz_sums(const FunctionHandle& f, int n, double delta, double p, int rule_degree, int rings = 4,
                      int ring_degree = 12) {
  if (f.domain.kind != DomainKind::sphere) throw std::domain_error("mz_sums: f must live on a sphere");
  if (n < 1) throw std::domain_error("mz_sums: n must be >= 1");
  if (!(p >= 1.0) || std::isinf(p)) throw std::domain_error("mz_sums: p must be finite and >= 1");
  if (!(delta > 0.0)) throw std::domain_error("mz_sums: delta must be positive");
  const int d = f.domain.d;
  const double rad = delta / n;
  const auto S = separated_set(d, rad);
  const auto R = sphere_rule(d, rule_degree);
  MZSums out;
  out.centers = S.centers.size();
  std::vector<double> lambda(S.centers.size(), 0.0);
  for (std::size_t q = 0; q < R.size(); ++q) {
    auto x = R.node(q);
    std::size_t best = 0;
    double bd = -2.0;
    for (std::size_t c = 0; c < S.centers.size(); ++c) {
      const double v = dot(x, S.centers[c]);
      if (v > bd) {
        bd = v;
        best = c;
      }
    }
    lambda[best] += R.weights[q];
    out.norm_pp += R.weights[q] * std::pow(std::abs(f(x)), p);
  }
  const auto ring = sphere_rule(d - 1, ring_degree);
  Point y(d);
  for (std::size_t c = 0; c < S.centers.size(); ++c) {
    const auto& w = S.centers[c];
    const auto basis = detail::tangent_basis(w);
    double lo = std::pow(std::abs(f(w)), p), hi = lo;
    for (int k = 1; k <= rings; ++k) {
      const double rho = rad * k / rings, cr = std::cos(rho), sr = std::sin(rho);
      for (std::size_t q = 0; q < ring.size(); ++q) {
        auto xi = ring.node(q);
        for (int a = 0; a < d; ++a) {
          double t = 0.0;
          for (int b = 0; b < d - 1; ++b) t += xi[b] * basis[b][a];
          y[a] = cr * w[a] + sr * t;
        }
        const double v = std::pow(std::abs(f(y)), p);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    out.lower += lambda[c] * lo;
    out.upper += lambda[c] * hi;
  }
  return out;
}

}  // namespace emod
