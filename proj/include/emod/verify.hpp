#pragma once

#include "emod/approximation.hpp"
#include "emod/core_math.hpp"
#include "emod/kfunctional.hpp"
#include "emod/mz.hpp"
#include "emod/polynomial.hpp"
#include "emod/quadrature.hpp"
#include "emod/smoothness.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

// Invariant suites shared by `emod verify` and the acceptance binary. Each
// suite returns one Check: a measured value compared against a bound.

namespace emod {

struct Check {
  std::string name;
  double value = 0.0;
  double bound = 0.0;
  bool pass = false;
  nlohmann::json detail = nlohmann::json::object();

  nlohmann::json to_json() const {
    return {{"name", name}, {"value", value}, {"bound", bound}, {"pass", pass}, {"detail", detail}};
  }
};

inline Check make_check(std::string name, double value, double bound, nlohmann::json detail = nlohmann::json::object()) {
  Check c{std::move(name), value, bound, std::isfinite(value) && value <= bound, std::move(detail)};
  return c;
}

namespace detail {

inline void monomials(int d, int n, std::vector<Polynomial::Exponents>& out) {
  Polynomial::Exponents e(d, 0);
  auto rec = [&](auto&& self, int k, int left) -> void {
    if (k == d) {
      out.push_back(e);
      return;
    }
    for (int a = 0; a <= left; ++a) {
      e[k] = a;
      self(self, k + 1, left - a);
    }
    e[k] = 0;
  };
  rec(rec, 0, n);
}

inline std::vector<Point> random_sphere_points(int d, int count, std::mt19937_64& rng) {
  std::normal_distribution<double> N(0.0, 1.0);
  std::vector<Point> pts;
  while (static_cast<int>(pts.size()) < count) {
    Point x(d);
    for (auto& v : x) v = N(rng);
    const double r = norm(x);
    if (r < 1e-8) continue;
    for (auto& v : x) v /= r;
    pts.push_back(x);
  }
  return pts;
}

inline std::vector<Point> random_ball_points(int d, int count, double radius, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(-radius, radius);
  std::vector<Point> pts;
  while (static_cast<int>(pts.size()) < count) {
    Point x(d);
    for (auto& v : x) v = U(rng);
    if (norm(x) < radius) pts.push_back(x);
  }
  return pts;
}

// u_i in (lo, 1) with |u|_1 < 1 - lo
inline std::vector<Point> random_simplex_points(int d, int count, double lo, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(lo, 1.0);
  std::vector<Point> pts;
  while (static_cast<int>(pts.size()) < count) {
    Point u(d);
    double s = 0.0;
    for (auto& v : u) s += (v = U(rng));
    if (s < 1.0 - lo) pts.push_back(u);
  }
  return pts;
}

}  // namespace detail

// max |C_n^lambda(1) - binom(n + 2 lambda - 1, n)| / binom over n <= nmax, lambda in {1/2, 1, 3/2}
inline Check check_gegenbauer_normalization(int nmax = 64) {
  double worst = 0.0;
  for (double lambda : {0.5, 1.0, 1.5})
    for (int n = 0; n <= nmax; ++n) {
      const double ref = gegenbauer_at_one(n, lambda);
      worst = std::max(worst, std::abs(gegenbauer({n, lambda}, 1.0) - ref) / ref);
    }
  return make_check("gegenbauer_normalization", worst, 1e-12, {{"nmax", nmax}});
}

// max_{monomials of degree <= n} |V_n f - f| at random points of S^{d-1}
inline Check check_reproduction(int d, int n, int rule_degree, int samples, std::mt19937_64& rng) {
  const auto R = sphere_rule(d, rule_degree);
  const auto pts = detail::random_sphere_points(d, samples, rng);
  std::vector<Polynomial::Exponents> mons;
  detail::monomials(d, n, mons);
  double worst = 0.0;
  for (const auto& e : mons) {
    Polynomial P(d);
    P.add_term(e, 1.0);
    const auto f = P.as_function(Domain::sphere(d));
    const auto V = vn_operator(f, n, R);
    for (const auto& x : pts) worst = std::max(worst, std::abs(V(x) - f(x)));
  }
  return make_check("vn_reproduction", worst, 1e-8,
                    {{"d", d}, {"n", n}, {"rule_degree", rule_degree}, {"monomials", mons.size()}, {"samples", samples}});
}

// max |Delta_{i,j,theta}^r V_n f - V_n Delta_{i,j,theta}^r f| over random polynomials of degree deg > n
inline Check check_commutation(int d, int n, int cases, int deg, std::mt19937_64& rng, int r = 2) {
  const auto R = sphere_rule(d, deg + 2 * n);
  std::uniform_int_distribution<int> axis(1, d);
  std::uniform_real_distribution<double> angle(0.05, 1.0);
  double worst = 0.0;
  for (int c = 0; c < cases; ++c) {
    const auto f = Polynomial::random(d, deg, rng).as_function(Domain::sphere(d));
    int i = axis(rng), j = axis(rng);
    while (j == i) j = axis(rng);
    const double th = angle(rng);
    auto df = make_function(f.domain, [f, i, j, th, r](std::span<const double> x) { return euler_difference(f, i, j, th, r, x); },
                            deg);
    const auto Vf = vn_operator(f, n, R), Vdf = vn_operator(df, n, R);
    for (const auto& x : detail::random_sphere_points(d, 4, rng))
      worst = std::max(worst, std::abs(euler_difference(Vf, i, j, th, r, x) - Vdf(x)));
  }
  return make_check("commutation", worst, 1e-8, {{"d", d}, {"n", n}, {"cases", cases}, {"degree", deg}, {"r", r}});
}

// sup |sum_{i<j} D_{i,j}^2 proj_k f + k(k+d-2) proj_k f| for k <= kmax
inline Check check_eigen_identity(const std::vector<int>& dims, int kmax, int samples, std::mt19937_64& rng) {
  double worst = 0.0;
  for (int d : dims) {
    const auto f = Polynomial::random(d, kmax, rng).as_function(Domain::sphere(d));
    const auto R = sphere_rule(d, 2 * kmax);
    const auto pts = detail::random_sphere_points(d, samples, rng);
    for (int k = 0; k <= kmax; ++k) {
      const auto pk = project_harmonic(f, k, R);
      for (const auto& x : pts) {
        double s = 0.0;
        for (int i = 1; i <= d; ++i)
          for (int j = i + 1; j <= d; ++j) s += dij_derivative(pk, i, j, 2, x);
        worst = std::max(worst, std::abs(s + k * (k + d - 2.0) * pk(x)));
      }
    }
  }
  // symbolic pin of the eigenvalue on x_1 x_2, d = 3
  Polynomial Y(3);
  Y.add_term({1, 1, 0}, 1.0);
  Polynomial S(3);
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j) S = S + Y.dij(i, j).dij(i, j);
  double sym = 0.0;
  for (const auto& x : detail::random_sphere_points(3, samples, rng)) sym = std::max(sym, std::abs(S(x) + 6.0 * Y(x)));
  return make_check("eigen_identity", std::max(worst, sym), 1e-6,
                    {{"dims", dims}, {"kmax", kmax}, {"residual", worst}, {"symbolic_x1x2", sym}});
}

// Laplace-Beltrami decomposition on x_1 x_2 and a smooth non-polynomial function
inline Check check_laplace_beltrami(int samples, std::mt19937_64& rng) {
  const auto pts = detail::random_sphere_points(3, samples, rng);
  const auto p = make_function(Domain::sphere(3), [](std::span<const double> x) { return x[0] * x[1]; }, 2);
  const auto g = make_function(Domain::sphere(3), [](std::span<const double> x) { return std::exp(x[0]) * x[2]; });
  const double a = laplace_beltrami_check(p, pts).residual, b = laplace_beltrami_check(g, pts).residual;
  return make_check("laplace_beltrami", std::max(a, b), 1e-6, {{"x1x2", a}, {"exp_x1_x3", b}});
}

// D_mu decomposition and simplex transfer on random polynomials of degree `deg`
inline Check check_dmu_decomposition(const std::vector<int>& dims, const std::vector<double>& mus, int deg, int samples,
                                     std::mt19937_64& rng) {
  double worst = 0.0;
  for (int d : dims)
    for (double mu : mus) {
      const auto g = Polynomial::random(d, deg, rng).as_function(Domain::ball(d));
      worst = std::max(worst, dmu_decomposition_check(g, mu, detail::random_ball_points(d, samples, 0.7, rng)).residual);
    }
  return make_check("dmu_decomposition", worst, 1e-8, {{"dims", dims}, {"mus", mus}, {"degree", deg}});
}

inline Check check_simplex_transfer(const std::vector<int>& dims, const std::vector<double>& mus, int deg, int samples,
                                    std::mt19937_64& rng) {
  double worst = 0.0;
  for (int d : dims)
    for (double mu : mus) {
      const auto g = Polynomial::random(d, deg, rng).as_function(Domain::ball(d));
      worst = std::max(worst, simplex_transfer_check(g, mu, detail::random_simplex_points(d, samples, 0.05, rng)).residual);
    }
  return make_check("simplex_transfer", worst, 1e-6, {{"dims", dims}, {"mus", mus}, {"degree", deg}});
}

// Bernstein ratios of random P in Pi_n on B^d. The value is the largest growth
// of the per-n maximum from one n to the next; a bounded family stays <= 1.1.
inline Check check_bernstein(int d, int r, double mu, const std::vector<int>& ns, int trials, std::mt19937_64& rng) {
  std::vector<double> per_n;
  nlohmann::json rows = nlohmann::json::array();
  for (int n : ns) {
    const auto R = ball_rule(d, mu, 2 * n + 4);
    double a = 0.0, b = 0.0;
    for (int k = 0; k < trials; ++k) {
      const auto rep = bernstein_check(Polynomial::random(d, n, rng), r, 2.0, mu, R);
      a = std::max(a, rep.dij_ratio);
      b = std::max(b, rep.phi_ratio);
    }
    per_n.push_back(std::max(a, b));
    rows.push_back({{"n", n}, {"dij_ratio", a}, {"phi_ratio", b}});
  }
  double growth = 0.0;
  for (std::size_t k = 1; k < per_n.size(); ++k) growth = std::max(growth, per_n[k] / per_n[k - 1]);
  const double C = *std::max_element(per_n.begin(), per_n.end());
  return make_check("bernstein", growth, 1.1,
                    {{"d", d}, {"r", r}, {"mu", mu}, {"trials", trials}, {"fitted_c", C}, {"per_n", rows}});
}

// worst MZ bracketing factor over random P in Pi_n on S^{d-1}; a non-bracketing sum fails outright
inline Check check_mz(int d, int n, double delta, int trials, std::mt19937_64& rng, double bound = 10.0) {
  double worst = 0.0;
  bool all = true;
  std::size_t centers = 0;
  for (int k = 0; k < trials; ++k) {
    const auto P = Polynomial::random(d, n, rng).as_function(Domain::sphere(d));
    const auto m = mz_sums(P, n, delta, 2.0, 20 * n);
    worst = std::max(worst, m.factor());
    all = all && m.brackets();
    centers = m.centers;
  }
  auto c = make_check("mz_bracketing", worst, bound,
                      {{"d", d}, {"n", n}, {"delta", delta}, {"trials", trials}, {"centers", centers}, {"brackets", all}});
  c.pass = c.pass && all;
  return c;
}

// spread max c / min c of the localization constants over ns
inline Check check_kernel_localization(int d, const std::vector<int>& ns, int ell = 6, int grid = 1000) {
  std::vector<double> cs;
  for (int n : ns) cs.push_back(kernel_localization_constant(n, d, ell, grid));
  const double spread = *std::max_element(cs.begin(), cs.end()) / *std::min_element(cs.begin(), cs.end());
  return make_check("kernel_localization", spread, 2.0, {{"d", d}, {"ns", ns}, {"ell", ell}, {"grid", grid}, {"c", cs}});
}

// Jackson and inverse ratios at t = 1/n from a K-functional engine (which
// supplies E_k) and a modulus engine:
//   jackson = E_n / omega(1/n),  inverse = omega(1/n) / (n^{-2} sum_{k<=n} k E_{k-1}),
//   kfunc   = K(1/n) / omega(1/n).
struct RatioRow {
  int n = 0;
  double E = 0.0, omega = 0.0, K = 0.0, jackson = 0.0, inverse = 0.0, kfunc = 0.0;

  nlohmann::json to_json() const {
    return {{"n", n}, {"E", E}, {"omega", omega}, {"K", K}, {"jackson", jackson}, {"inverse", inverse}, {"kfunc", kfunc}};
  }
};

inline std::vector<RatioRow> jackson_rows(KFunctionalEngine& K, ModulusEngine& M, const std::vector<int>& ns) {
  std::vector<RatioRow> rows;
  for (int n : ns) {
    RatioRow w;
    w.n = n;
    w.E = K.best_approx(n);
    w.omega = M(1.0 / n);
    w.K = K(n, 2);
    double sum = 0.0;
    for (int k = 1; k <= n; ++k) sum += k * K.best_approx(k - 1);
    w.jackson = w.E / w.omega;
    w.inverse = w.omega / (sum / (static_cast<double>(n) * n));
    w.kfunc = w.K / w.omega;
    rows.push_back(w);
  }
  return rows;
}

}  // namespace emod
