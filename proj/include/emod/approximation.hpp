#pragma once

#include "emod/ball_kernel.hpp"
#include "emod/core_math.hpp"
#include "emod/polynomial.hpp"
#include "emod/quadrature.hpp"
#include "emod/smoothness.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace emod {

// ---------------------------------------------------------------------------
// Reports

struct OperatorReport {
  std::string identity;
  double residual = 0.0;
  std::size_t samples = 0;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const {
    return {{"identity", identity}, {"residual", residual}, {"samples", samples}, {"seed", seed}};
  }
};

namespace detail {

// f sampled once at the nodes of a rule; shared by the returned operators.
struct NodeSamples {
  QuadratureRule rule;
  std::vector<double> wf;  // weight * f(node)
};

inline std::shared_ptr<const NodeSamples> sample_nodes(const FunctionHandle& f, const QuadratureRule& R) {
  auto s = std::make_shared<NodeSamples>();
  s->rule = R;
  s->wf.resize(R.size());
  for (std::size_t q = 0; q < R.size(); ++q) {
    const double v = f(R.node(q));
    if (!std::isfinite(v)) throw std::domain_error("approximation: non-finite sample at node " + std::to_string(q));
    s->wf[q] = R.weights[q] * v;
  }
  return s;
}

inline void check_sphere_rule(const FunctionHandle& f, const QuadratureRule& R, const char* who) {
  if (f.domain.kind != DomainKind::sphere) throw std::domain_error(std::string(who) + ": f must live on a sphere");
  if (f.domain.d < 3) throw std::domain_error(std::string(who) + ": needs d >= 3");
  if (R.domain != f.domain) throw std::domain_error(std::string(who) + ": rule and f live on different domains");
}

inline void check_ball_rule(const FunctionHandle& f, const QuadratureRule& R, double mu, const char* who) {
  if (!f.domain.is_ball_like()) throw std::domain_error(std::string(who) + ": f must live on a ball");
  if (R.domain != f.domain) throw std::domain_error(std::string(who) + ": rule and f live on different domains");
  if (std::abs(R.mu - mu) > 1e-12) throw std::domain_error(std::string(who) + ": rule weight parameter differs from mu");
  if (f.domain.d + mu_to_m(mu) < 3)
    throw std::domain_error(std::string(who) + ": d = 1 with mu = 0 is not supported (lifted sphere is a circle)");
}

// Z_k(t) = (k + lambda)/lambda C_k^lambda(t) for k = 0..K-1, added into out with factor c.
inline void zonal_all(int K, double lambda, double t, double c, std::span<double> out) {
  double c0 = 1.0, c1 = 2.0 * lambda * t;
  for (int k = 0; k < K; ++k) {
    double v;
    if (k == 0) {
      v = 1.0;
    } else if (k == 1) {
      v = c1;
    } else {
      const double c2 = (2.0 * (k + lambda - 1.0) * t * c1 - (k + 2.0 * lambda - 2.0) * c0) / k;
      c0 = c1;
      c1 = c2;
      v = c2;
    }
    out[k] += c * (k + lambda) / lambda * v;
  }
}

// 8th-order central stencils, offsets 1..4
inline constexpr double kD1[] = {4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0};
inline constexpr double kD2[] = {8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0, -1.0 / 560.0};
inline constexpr double kD2c = -205.0 / 72.0;

// derivative of f along direction e at x
template <class F>
double fd_first(F&& f, std::span<const double> x, std::span<const double> e, double h) {
  Point y(x.begin(), x.end());
  double s = 0.0;
  for (int k = 1; k <= 4; ++k) {
    for (std::size_t c = 0; c < y.size(); ++c) y[c] = x[c] + k * h * e[c];
    const double fp = f(std::span<const double>(y));
    for (std::size_t c = 0; c < y.size(); ++c) y[c] = x[c] - k * h * e[c];
    s += kD1[k - 1] * (fp - f(std::span<const double>(y)));
  }
  return s / h;
}

template <class F>
double fd_second(F&& f, std::span<const double> x, std::span<const double> e, double h) {
  Point y(x.begin(), x.end());
  double s = kD2c * f(x);
  for (int k = 1; k <= 4; ++k) {
    for (std::size_t c = 0; c < y.size(); ++c) y[c] = x[c] + k * h * e[c];
    const double fp = f(std::span<const double>(y));
    for (std::size_t c = 0; c < y.size(); ++c) y[c] = x[c] - k * h * e[c];
    s += kD2[k - 1] * (fp + f(std::span<const double>(y)));
  }
  return s / (h * h);
}

inline Point unit_vector(int d, int i) {
  Point e(d, 0.0);
  e[i] = 1.0;
  return e;
}

// D_{i,i}^2 g = W_mu^{-1} d_i [(1 - |x|^2) W_mu d_i g] by nested differences (0-based i).
inline double dii_nested(const FunctionHandle& g, double mu, int i, std::span<const double> x, double h) {
  const int d = static_cast<int>(x.size());
  const Point e = unit_vector(d, i);
  auto inner = [&](std::span<const double> y) {
    const double a = std::max(0.0, 1.0 - norm2(y));
    return std::pow(a, mu + 0.5) * fd_first(g, y, e, h);
  };
  return fd_first(inner, x, e, h) / std::pow(1.0 - norm2(x), mu - 0.5);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Operators on the sphere

// V_n f(x) = (1/sigma_{d-1}) int f(y) K_n(<x,y>) dsigma(y).
inline FunctionHandle vn_operator(const FunctionHandle& f, int n, const QuadratureRule& rule) {
  detail::check_sphere_rule(f, rule, "vn_operator");
  if (n < 1) throw std::domain_error("vn_operator: n must be >= 1");
  if (f.degree_hint && rule.exact_degree < *f.degree_hint + 2 * n)
    throw std::domain_error("vn_operator: rule degree below deg(f) + 2n");
  const int d = f.domain.d;
  auto S = detail::sample_nodes(f, rule);
  auto K = std::make_shared<SmoothedKernel>(n, d);
  const double inv = 1.0 / sphere_area(d);
  return make_function(
      f.domain,
      [S, K, inv](std::span<const double> x) {
        double s = 0.0;
        for (std::size_t q = 0; q < S->wf.size(); ++q) s += S->wf[q] * (*K)(dot(x, S->rule.node(q)));
        return inv * s;
      },
      2 * n);
}

// proj_k f(x) = (1/sigma_{d-1}) int f(y) Z_k(<x,y>) dsigma(y).
inline FunctionHandle project_harmonic(const FunctionHandle& f, int k, const QuadratureRule& rule) {
  detail::check_sphere_rule(f, rule, "project_harmonic");
  if (k < 0) throw std::domain_error("project_harmonic: k must be >= 0");
  const int d = f.domain.d;
  auto S = detail::sample_nodes(f, rule);
  const double inv = 1.0 / sphere_area(d);
  return make_function(
      f.domain,
      [S, k, d, inv](std::span<const double> x) {
        double s = 0.0;
        for (std::size_t q = 0; q < S->wf.size(); ++q) s += S->wf[q] * zonal_kernel(k, d, dot(x, S->rule.node(q)));
        return inv * s;
      },
      k);
}

struct SpectralExpansion {
  std::vector<FunctionHandle> components;  // proj_k f, k = 0..max_degree
  int max_degree = 0;
  Domain domain;
};

inline SpectralExpansion make_spectral_expansion(const FunctionHandle& f, int max_degree, const QuadratureRule& rule) {
  detail::check_sphere_rule(f, rule, "make_spectral_expansion");
  if (max_degree < 0) throw std::domain_error("make_spectral_expansion: negative degree");
  SpectralExpansion ex;
  ex.max_degree = max_degree;
  ex.domain = f.domain;
  for (int k = 0; k <= max_degree; ++k) ex.components.push_back(project_harmonic(f, k, rule));
  return ex;
}

// sum_k mult(k) proj_k f
inline FunctionHandle spectral_multiplier(const SpectralExpansion& ex, const std::function<double(int)>& mult) {
  if (static_cast<int>(ex.components.size()) != ex.max_degree + 1)
    throw std::domain_error("spectral_multiplier: expansion is incomplete");
  std::vector<std::pair<double, FunctionHandle>> parts;
  int deg = 0;
  for (int k = 0; k <= ex.max_degree; ++k) {
    const double m = mult(k);
    if (m == 0.0) continue;
    parts.emplace_back(m, ex.components[k]);
    deg = k;
  }
  return make_function(
      ex.domain,
      [parts](std::span<const double> x) {
        double s = 0.0;
        for (const auto& [m, g] : parts) s += m * g(x);
        return s;
      },
      deg);
}

// ---------------------------------------------------------------------------
// Operators on the ball, through the lift to S^{d+m-1}

// V_n^mu f(x) = (a_mu / sigma_m) int_{B^d} f(y) K_n^mu(x, y) W_mu(y) dy, mu = (m-1)/2.
inline FunctionHandle vn_mu_operator(const FunctionHandle& f, int n, double mu, const QuadratureRule& rule) {
  detail::check_ball_rule(f, rule, mu, "vn_mu_operator");
  if (n < 1) throw std::domain_error("vn_mu_operator: n must be >= 1");
  if (f.degree_hint && rule.exact_degree < *f.degree_hint + 2 * n)
    throw std::domain_error("vn_mu_operator: rule degree below deg(f) + 2n");
  const int d = f.domain.d, m = mu_to_m(mu);
  auto S = detail::sample_nodes(f, rule);
  auto circle = std::make_shared<QuadratureRule>(lifted_sphere_rule(m, 2 * n));
  auto K = std::make_shared<SmoothedKernel>(n, d + m);
  const double c = 1.0 / (ball_weight_mass(d, mu) * sphere_area(m));
  return make_function(
      f.domain,
      [S, circle, K, c, m](std::span<const double> x) {
        Point xp(m, 0.0);
        xp[0] = std::sqrt(std::max(0.0, 1.0 - norm2(x)));
        double s = 0.0;
        for (std::size_t q = 0; q < S->wf.size(); ++q)
          s += S->wf[q] * ball_kernel_Kn_mu(*K, x, xp, S->rule.node(q), *circle);
        return c * s;
      },
      2 * n);
}

// ---------------------------------------------------------------------------
// Best approximation

enum class ApproxVariant { sphere, ball };

namespace detail {

// |f|^2 - sum_{k<n} |proj_k f|^2 with the projections as double sums over the rule.
inline double l2_tail_sphere(const NodeSamples& S, int d, int n) {
  const auto& R = S.rule;
  const double lambda = 0.5 * (d - 2), inv = 1.0 / sphere_area(d);
  double f2 = 0.0;
  for (std::size_t a = 0; a < R.size(); ++a) f2 += S.wf[a] * S.wf[a] / R.weights[a];
  std::vector<double> e(n, 0.0);
  for (std::size_t a = 0; a < R.size(); ++a) {
    auto x = R.node(a);
    detail::zonal_all(n, lambda, 1.0, S.wf[a] * S.wf[a], e);
    for (std::size_t b = a + 1; b < R.size(); ++b)
      detail::zonal_all(n, lambda, std::clamp(dot(x, R.node(b)), -1.0, 1.0), 2.0 * S.wf[a] * S.wf[b], e);
  }
  double s = f2;
  for (double v : e) s -= inv * v;
  return s;
}

inline double l2_tail_ball(const NodeSamples& S, int d, double mu, int n) {
  const auto& R = S.rule;
  const int m = mu_to_m(mu);
  const double lambda = 0.5 * (d + m - 2), c = 1.0 / (ball_weight_mass(d, mu) * sphere_area(m));
  const QuadratureRule xi = lifted_sphere_rule(m, std::max(n, 1));
  double f2 = 0.0;
  std::vector<double> amp(R.size());
  for (std::size_t a = 0; a < R.size(); ++a) {
    f2 += S.wf[a] * S.wf[a] / R.weights[a];
    amp[a] = std::sqrt(std::max(0.0, 1.0 - norm2(R.node(a))));
  }
  std::vector<double> e(n, 0.0);
  for (std::size_t a = 0; a < R.size(); ++a) {
    auto x = R.node(a);
    for (std::size_t b = a; b < R.size(); ++b) {
      const double xy = dot(x, R.node(b)), ab = amp[a] * amp[b];
      const double pair = (a == b ? 1.0 : 2.0) * S.wf[a] * S.wf[b];
      for (std::size_t q = 0; q < xi.size(); ++q)
        detail::zonal_all(n, lambda, std::clamp(xy + ab * xi.node(q)[0], -1.0, 1.0), pair * xi.weights[q], e);
    }
  }
  double s = f2;
  for (double v : e) s -= c * v;
  return s;
}

}  // namespace detail

// E_n(f)_p. For p = 2 the exact distance to Pi_{n-1} through orthogonal
// projection; otherwise the near-best surrogate |f - V_{n/2} f|_p, which is an
// upper bound because V_{n/2} f lies in Pi_{n-1}. A degree hint below n
// certifies f in Pi_{n-1} and gives 0 in both cases.
inline double best_approx(const FunctionHandle& f, int n, double p, const QuadratureRule& rule,
                          ApproxVariant variant = ApproxVariant::sphere, double mu = 0.5) {
  if (n < 1) throw std::domain_error("best_approx: n must be >= 1");
  if (!(p >= 1.0)) throw std::domain_error("best_approx: p must be >= 1");
  if (variant == ApproxVariant::sphere) {
    detail::check_sphere_rule(f, rule, "best_approx");
  } else {
    detail::check_ball_rule(f, rule, mu, "best_approx");
  }
  if (f.degree_hint && *f.degree_hint < n) return 0.0;  // f lies in Pi_{n-1}
  const int d = f.domain.d;
  auto S = detail::sample_nodes(f, rule);
  if (p == 2.0) {
    const double tail = variant == ApproxVariant::sphere ? detail::l2_tail_sphere(*S, d, n)
                                                         : detail::l2_tail_ball(*S, d, mu, n);
    return std::sqrt(std::max(0.0, tail));
  }
  const int half = n / 2;
  std::function<double(std::span<const double>)> approx;
  if (half == 0) {
    double mean = 0.0;
    for (double v : S->wf) mean += v;
    mean /= rule.mass();
    approx = [mean](std::span<const double>) { return mean; };
  } else {
    approx = (variant == ApproxVariant::sphere ? vn_operator(f, half, rule) : vn_mu_operator(f, half, mu, rule)).evaluate;
  }
  const bool sup = std::isinf(p);
  double acc = 0.0;
  for (std::size_t q = 0; q < rule.size(); ++q) {
    const double v = std::abs(S->wf[q] / rule.weights[q] - approx(rule.node(q)));
    acc = sup ? std::max(acc, v) : acc + rule.weights[q] * std::pow(v, p);
  }
  return sup ? acc : std::pow(acc, 1.0 / p);
}

// ---------------------------------------------------------------------------
// Differential-operator identities

// sum_{i<j} D_{i,j}^2 f against the Laplacian of f(x/|x|), both by numerical differentiation.
inline OperatorReport laplace_beltrami_check(const FunctionHandle& f, const std::vector<Point>& points, double h = 0.02) {
  if (f.domain.kind != DomainKind::sphere) throw std::domain_error("laplace_beltrami_check: f must live on a sphere");
  const int d = f.domain.d;
  auto radial = [&](std::span<const double> y) {
    Point z(y.begin(), y.end());
    const double r = norm(z);
    for (double& v : z) v /= r;
    return f(z);
  };
  OperatorReport rep{"laplace_beltrami", 0.0, points.size(), 0};
  for (const auto& x : points) {
    if (static_cast<int>(x.size()) != d || std::abs(norm(x) - 1.0) > 1e-10)
      throw std::domain_error("laplace_beltrami_check: sample points must be unit vectors");
    double lhs = 0.0;
    for (int i = 1; i <= d; ++i)
      for (int j = i + 1; j <= d; ++j) lhs += dij_derivative(f, i, j, 2, x);
    double rhs = 0.0;
    for (int i = 0; i < d; ++i) rhs += detail::fd_second(radial, x, detail::unit_vector(d, i), h);
    rep.residual = std::max(rep.residual, std::abs(lhs - rhs));
  }
  return rep;
}

// D_mu g against sum_i D_{i,i}^2 g + sum_{i<j} D_{i,j}^2 g.
inline OperatorReport dmu_decomposition_check(const FunctionHandle& g, double mu, const std::vector<Point>& points,
                                              double h = 0.01) {
  if (!g.domain.is_ball_like()) throw std::domain_error("dmu_decomposition_check: g must live on a ball");
  if (!(mu >= 0.0)) throw std::domain_error("dmu_decomposition_check: mu must be >= 0");
  const int d = g.domain.d;
  OperatorReport rep{"dmu_decomposition", 0.0, points.size(), 0};
  for (const auto& x : points) {
    if (static_cast<int>(x.size()) != d) throw std::domain_error("dmu_decomposition_check: wrong point dimension");
    if (norm(x) + 8.0 * h >= 1.0) throw std::domain_error("dmu_decomposition_check: sample too close to the boundary");
    // D_mu g = sum (1 - x_i^2) g_ii - 2 sum_{i<j} x_i x_j g_ij - (d + 2 mu) sum x_i g_i
    double lhs = 0.0;
    for (int i = 0; i < d; ++i) {
      const Point ei = detail::unit_vector(d, i);
      lhs += (1.0 - x[i] * x[i]) * detail::fd_second(g, x, ei, h) - (d + 2.0 * mu) * x[i] * detail::fd_first(g, x, ei, h);
      for (int j = i + 1; j < d; ++j) {
        const Point ej = detail::unit_vector(d, j);
        auto gj = [&](std::span<const double> y) { return detail::fd_first(g, y, ej, h); };
        lhs -= 2.0 * x[i] * x[j] * detail::fd_first(gj, x, ei, h);
      }
    }
    double rhs = 0.0;
    for (int i = 0; i < d; ++i) {
      rhs += detail::dii_nested(g, mu, i, x, h);
      for (int j = i + 1; j < d; ++j) rhs += dij_derivative(g, i + 1, j + 1, 2, x);
    }
    rep.residual = std::max(rep.residual, std::abs(lhs - rhs));
  }
  return rep;
}

// D_{i,j}^2 g(psi(u)) against 4 U_{i,j} (g o psi)(u) on the simplex, psi(u) = (sqrt u_1, ..., sqrt u_d),
// U_{i,j} = W_T^{-1} d_{ij} [u_i u_j W_T d_{ij}], d_{ij} = d_i - d_j, and
// U_{i,i} = W_T^{-1} d_i [u_i (1 - |u|) W_T d_i], W_T = prod u_k^{-1/2} (1 - |u|)^{mu - 1/2}.
inline OperatorReport simplex_transfer_check(const FunctionHandle& g, double mu, const std::vector<Point>& us,
                                             double h = 2e-4) {
  if (!g.domain.is_ball_like()) throw std::domain_error("simplex_transfer_check: g must live on a ball");
  if (!(mu >= 0.0)) throw std::domain_error("simplex_transfer_check: mu must be >= 0");
  const int d = g.domain.d;
  auto G = [&](std::span<const double> u) {
    Point x(u.size());
    for (std::size_t k = 0; k < u.size(); ++k) x[k] = std::sqrt(u[k]);
    return g(x);
  };
  auto WT = [&](std::span<const double> u) {
    double w = std::pow(1.0 - std::accumulate(u.begin(), u.end(), 0.0), mu - 0.5);
    for (double v : u) w /= std::sqrt(v);
    return w;
  };
  OperatorReport rep{"simplex_transfer", 0.0, us.size(), 0};
  for (const auto& u : us) {
    if (static_cast<int>(u.size()) != d) throw std::domain_error("simplex_transfer_check: wrong point dimension");
    const double s1 = std::accumulate(u.begin(), u.end(), 0.0);
    const double margin = std::min(*std::min_element(u.begin(), u.end()), 1.0 - s1);
    if (!(margin > 0.0)) throw std::domain_error("simplex_transfer_check: sample touches the simplex boundary");
    const double hu = std::min(h, margin / 20.0);
    Point x(d);
    for (int k = 0; k < d; ++k) x[k] = std::sqrt(u[k]);
    const double hx = std::min(0.01, (1.0 - norm(x)) / 20.0);
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) {
        Point e(d, 0.0);
        e[i] += 1.0;
        if (j != i) e[j] -= 1.0;
        auto inner = [&](std::span<const double> v) {
          const double s = std::accumulate(v.begin(), v.end(), 0.0);
          const double c = i == j ? v[i] * (1.0 - s) : v[i] * v[j];
          return c * WT(v) * detail::fd_first(G, v, e, hu);
        };
        const double rhs = 4.0 * detail::fd_first(inner, u, e, hu) / WT(u);
        const double lhs = i == j ? detail::dii_nested(g, mu, i, x, hx) : dij_derivative(g, i + 1, j + 1, 2, x);
        rep.residual = std::max(rep.residual, std::abs(lhs - rhs));
      }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Bernstein ratios

struct BernsteinReport {
  int n = 0;
  int r = 1;
  double dij_ratio = 0.0;  // max_{i<j} |D_{i,j}^r P| / (n^r |P|)
  double phi_ratio = 0.0;  // max_i |phi^r d_i^r P| / (n^r |P|), phi = sqrt(1 - |x|^2)

  nlohmann::json to_json() const { return {{"n", n}, {"r", r}, {"dij_ratio", dij_ratio}, {"phi_ratio", phi_ratio}}; }
};

inline BernsteinReport bernstein_check(const Polynomial& P, int r, double p, double mu, const QuadratureRule& rule) {
  if (r < 1) throw std::domain_error("bernstein_check: r must be >= 1");
  if (!(p >= 1.0)) throw std::domain_error("bernstein_check: p must be >= 1");
  if (!rule.domain.is_ball_like()) throw std::domain_error("bernstein_check: rule must live on a ball");
  if (std::abs(rule.mu - mu) > 1e-12) throw std::domain_error("bernstein_check: rule weight parameter differs from mu");
  if (P.dim() != rule.dim) throw std::domain_error("bernstein_check: dimension mismatch");
  const int d = P.dim();
  BernsteinReport rep;
  rep.n = P.degree();
  rep.r = r;
  auto norm_of = [&](auto&& fn) {
    const bool sup = std::isinf(p);
    double acc = 0.0;
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double v = std::abs(fn(rule.node(q)));
      acc = sup ? std::max(acc, v) : acc + rule.weights[q] * std::pow(v, p);
    }
    return sup ? acc : std::pow(acc, 1.0 / p);
  };
  const double base = norm_of([&](std::span<const double> x) { return P(x); });
  if (rep.n == 0 || base == 0.0) return rep;
  const double scale = std::pow(static_cast<double>(rep.n), r) * base;
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      Polynomial Q = P;
      for (int k = 0; k < r; ++k) Q = Q.dij(i, j);
      rep.dij_ratio = std::max(rep.dij_ratio, norm_of([&](std::span<const double> x) { return Q(x); }) / scale);
    }
    Polynomial Q = P;
    for (int k = 0; k < r; ++k) Q = Q.derivative(i);
    const double v = norm_of([&](std::span<const double> x) {
      return std::pow(std::max(0.0, 1.0 - norm2(x)), 0.5 * r) * Q(x);
    });
    rep.phi_ratio = std::max(rep.phi_ratio, v / scale);
  }
  return rep;
}

}  // namespace emod
