#include "emod/approximation.hpp"
#include "emod/harmonic.hpp"
#include "emod/kfunctional.hpp"
#include "emod/verify.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace emod;

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

FunctionHandle poly(Domain dom, int degree, std::function<double(std::span<const double>)> f) {
  return make_function(dom, std::move(f), degree);
}

// C_n^mu as a polynomial in one variable, by the three-term recurrence
Polynomial gegenbauer_poly(int n, double mu) {
  Polynomial a = Polynomial::constant(1, 1.0), b = Polynomial::coordinate(1, 0, 2.0 * mu);
  if (n == 0) return a;
  for (int k = 2; k <= n; ++k) {
    Polynomial c = b.times_coordinate(0) * (2.0 * (k + mu - 1.0) / k) - a * ((k + 2.0 * mu - 2.0) / k);
    a = b;
    b = c;
  }
  return b;
}

std::vector<Point> sphere_points(int d, int count, unsigned seed) {
  std::mt19937_64 rng(seed);
  return detail::random_sphere_points(d, count, rng);
}

double sup_diff(const FunctionHandle& a, const FunctionHandle& b, const std::vector<Point>& pts) {
  double m = 0.0;
  for (const auto& x : pts) m = std::max(m, std::abs(a(x) - b(x)));
  return m;
}

}  // namespace

TEST(VnOperator, Examples) {
  const auto one = poly(Domain::sphere(3), 0, [](std::span<const double>) { return 1.0; });
  const auto pts = sphere_points(3, 20, 1);
  for (int n : {1, 4, 9}) {
    const auto V = vn_operator(one, n, sphere_rule(3, 2 * n));
    for (const auto& x : pts) EXPECT_NEAR(V(x), 1.0, 1e-10);
    EXPECT_EQ(V.degree_hint, 2 * n);
  }
  const auto f = poly(Domain::sphere(3), 2, [](std::span<const double> x) { return x[0] * x[1]; });
  EXPECT_LT(sup_diff(vn_operator(f, 2, sphere_rule(3, 8)), f, pts), 1e-8);
  EXPECT_THROW(vn_operator(f, 4, sphere_rule(3, 8)), std::domain_error);
  EXPECT_THROW(vn_operator(f, 0, sphere_rule(3, 8)), std::domain_error);
}

TEST(VnOperator, ReproductionProperty) {
  std::vector<Polynomial::Exponents> mons;
  for (int n : {1, 3, 5}) {
    mons.clear();
    detail::monomials(3, n, mons);
    const auto R = sphere_rule(3, 3 * n);
    const auto pts = sphere_points(3, 10, 2);
    for (const auto& e : mons) {
      Polynomial P(3);
      P.add_term(e, 1.0);
      const auto f = P.as_function(Domain::sphere(3));
      EXPECT_LT(sup_diff(vn_operator(f, n, R), f, pts), 1e-8) << "n=" << n;
    }
  }
}

TEST(VnOperator, CommutesWithDifferences) {
  std::mt19937_64 rng(3);
  const auto P = Polynomial::random(3, 6, rng);
  const auto f = P.as_function(Domain::sphere(3));
  const int n = 4;
  const auto R = sphere_rule(3, 6 + 2 * n);
  const auto V = vn_operator(f, n, R);
  for (auto [i, j] : {std::pair{1, 2}, std::pair{2, 3}}) {
    const double t = 0.37;
    const auto Df = make_function(Domain::sphere(3), [&, i, j](std::span<const double> x) { return euler_difference(f, i, j, t, 2, x); }, 6);
    const auto VD = vn_operator(Df, n, R);
    for (const auto& x : sphere_points(3, 10, 4)) EXPECT_NEAR(euler_difference(V, i, j, t, 2, x), VD(x), 1e-8);
  }
}

TEST(VnOperator, BoundedOnContinuousFunctions) {
  const auto R = sphere_rule(3, 40);
  for (double a : {0.25, 1.5}) {
    const auto f = make_function(Domain::sphere(3), [a](std::span<const double> x) { return std::pow(std::abs(x[0] - 0.3), a); });
    for (int n : {4, 12}) {
      const auto V = vn_operator(f, n, R);
      for (double p : {1.0, 2.0, inf}) EXPECT_LT(lp_norm(R, V, p) / lp_norm(R, f, p), 3.0) << "a=" << a << " n=" << n;
    }
  }
}

TEST(VnMuOperator, Examples) {
  std::mt19937_64 rng(5);
  for (double mu : {0.0, 0.5, 1.0}) {
    const auto one = poly(Domain::ball(2), 0, [](std::span<const double>) { return 1.0; });
    const auto R = ball_rule(2, mu, 8);
    const auto pts = detail::random_ball_points(2, 10, 0.95, rng);
    const auto V1 = vn_mu_operator(one, 3, mu, R);
    for (const auto& x : pts) EXPECT_NEAR(V1(x), 1.0, 1e-10) << "mu=" << mu;
    const auto f = poly(Domain::ball(2), 2, [](std::span<const double> x) { return x[0] * x[0] - 0.4 * x[1] + 0.2; });
    EXPECT_LT(sup_diff(vn_mu_operator(f, 2, mu, R), f, pts), 1e-8) << "mu=" << mu;
  }
  const auto g = poly(Domain::ball(2), 1, [](std::span<const double> x) { return x[0]; });
  EXPECT_THROW(vn_mu_operator(g, 2, 0.25, ball_rule(2, 0.25, 8)), std::domain_error);
}

TEST(VnMuOperator, TransferToLiftedSphere) {
  // (V_n F)(x, x') = (V_n^mu f)(x) for F the lift of f to S^{d+m-1}; d = 2, m = 2, n = 4
  const auto f = poly(Domain::ball(2), 2, [](std::span<const double> x) { return x[0] * x[0]; });
  const auto F = lift_to_sphere(f, 2);
  const auto VF = vn_operator(F, 4, sphere_rule(4, 12));
  const auto Vb = vn_mu_operator(f, 4, 0.5, ball_rule(2, 0.5, 12));
  std::mt19937_64 rng(6);
  double res = 0.0;
  for (const auto& y : detail::random_sphere_points(4, 20, rng)) res = std::max(res, std::abs(VF(y) - Vb(std::span<const double>(y).first(2))));
  EXPECT_LT(res, 1e-6);
}

TEST(ProjectHarmonic, Examples) {
  const auto R = sphere_rule(3, 8);
  const auto pts = sphere_points(3, 10, 7);
  const auto one = poly(Domain::sphere(3), 0, [](std::span<const double>) { return 1.0; });
  const auto x1 = poly(Domain::sphere(3), 1, [](std::span<const double> x) { return x[0]; });
  for (const auto& x : pts) {
    EXPECT_NEAR(project_harmonic(one, 0, R)(x), 1.0, 1e-12);
    EXPECT_NEAR(project_harmonic(x1, 1, R)(x), x[0], 1e-9);
    EXPECT_NEAR(project_harmonic(x1, 2, R)(x), 0.0, 1e-9);
  }
}

TEST(ProjectHarmonic, EigenstructureProperty) {
  std::mt19937_64 rng(8);
  for (int d : {3, 4}) {
    const auto P = Polynomial::random(d, 6, rng);
    const auto f = P.as_function(Domain::sphere(d));
    const auto R = sphere_rule(d, 12);
    for (int k = 0; k <= 6; ++k) {
      const auto Y = project_harmonic(f, k, R);
      for (const auto& x : detail::random_sphere_points(d, 4, rng)) {
        double s = 0.0;
        for (int i = 1; i <= d; ++i)
          for (int j = i + 1; j <= d; ++j) s += dij_derivative(Y, i, j, 2, x);
        EXPECT_NEAR(s, -k * (k + d - 2.0) * Y(x), 1e-6) << "d=" << d << " k=" << k;
      }
    }
  }
}

TEST(SpectralMultiplier, Examples) {
  const auto f = poly(Domain::sphere(3), 2, [](std::span<const double> x) { return x[0] * x[1] + 0.5 * x[2]; });
  const auto ex = make_spectral_expansion(f, 4, sphere_rule(3, 8));
  const auto id = spectral_multiplier(ex, [](int) { return 1.0; });
  const auto zero = spectral_multiplier(ex, [](int) { return 0.0; });
  const auto lap = spectral_multiplier(ex, [](int k) { return k * (k + 1.0); });
  for (const auto& x : sphere_points(3, 10, 9)) {
    EXPECT_NEAR(id(x), f(x), 1e-12);
    EXPECT_EQ(zero(x), 0.0);
    EXPECT_NEAR(lap(x), 6.0 * x[0] * x[1] + 1.0 * x[2], 1e-12);
  }
}

TEST(BestApprox, Examples) {
  const auto R = sphere_rule(3, 16);
  const auto f = poly(Domain::sphere(3), 3, [](std::span<const double> x) { return x[0] * x[1] * x[2]; });
  EXPECT_NEAR(best_approx(f, 3, 2.0, R), std::sqrt(4.0 * pi / 105.0), 1e-12);
  EXPECT_EQ(best_approx(f, 4, 2.0, R), 0.0);
  EXPECT_EQ(best_approx(f, 4, 1.0, R), 0.0);
  // without the degree hint the projection arithmetic still gives 0
  const auto g = make_function(Domain::sphere(3), f.evaluate);
  EXPECT_NEAR(best_approx(g, 4, 2.0, R), 0.0, 1e-7);
  EXPECT_NEAR(best_approx(g, 1, 2.0, R), std::sqrt(4.0 * pi / 105.0), 1e-12);
  EXPECT_THROW(best_approx(f, 0, 2.0, R), std::domain_error);
  EXPECT_THROW(best_approx(f, 2, 0.5, R), std::domain_error);
}

TEST(BestApprox, DecreasesWithDegree) {
  const auto R = sphere_rule(3, 48);
  const auto f = make_function(Domain::sphere(3), [](std::span<const double> x) { return std::pow(1.0 - x[0], 0.75); });
  double prev = inf;
  for (int n : {4, 8}) {
    const double e2 = best_approx(f, n, 2.0, R), s2 = best_approx(f, 2 * n, 2.0, R);
    const double e1 = best_approx(f, n, 1.0, R);
    EXPECT_GT(e1, 0.0);
    EXPECT_LE(e1, prev);
    prev = e1;
    EXPECT_LE(s2, e2);
  }
}

TEST(BestApprox, MatchesOrthogonalExpansionAnalyzers) {
  const auto f = make_function(Domain::sphere(3), [](std::span<const double> x) { return std::exp(x[0] + 0.5 * x[2]); });
  const auto an = analyze_sphere2(f, 16, 2);
  const auto R = sphere_rule(3, 40);
  // both sides subtract captured energy from |f|^2, so the error scales like |f|^2 / E_n
  auto tol = [](double norm2, double e) { return 1e-9 + 1e-11 * norm2 / e; };
  for (int n : {1, 3, 6})
    EXPECT_NEAR(best_approx(f, n, 2.0, R), an.best_approx(n), tol(an.norm2, an.best_approx(n))) << "n=" << n;
  const auto g = make_function(Domain::ball(2), [](std::span<const double> x) { return std::cos(x[0] + 2.0 * x[1]); });
  for (double mu : {0.5, 1.0}) {
    const auto dk = analyze_disk(g, 16, mu);
    const auto B = ball_rule(2, mu, 40);
    for (int n : {1, 3, 6})
      EXPECT_NEAR(best_approx(g, n, 2.0, B, ApproxVariant::ball, mu), dk.best_approx(n), tol(dk.norm2, dk.best_approx(n)))
          << "mu=" << mu;
  }
}

TEST(Identities, LaplaceBeltrami) {
  const auto pts = sphere_points(3, 10, 10);
  const auto c = poly(Domain::sphere(3), 0, [](std::span<const double>) { return 3.0; });
  EXPECT_LT(laplace_beltrami_check(c, pts).residual, 1e-10);
  const auto lin = poly(Domain::sphere(3), 1, [](std::span<const double> x) { return x[0]; });
  EXPECT_LT(laplace_beltrami_check(lin, pts).residual, 1e-6);
  for (const auto& x : pts) {
    double s = 0.0;
    for (auto [i, j] : {std::pair{1, 2}, std::pair{1, 3}, std::pair{2, 3}}) s += dij_derivative(lin, i, j, 2, x);
    EXPECT_NEAR(s, -2.0 * x[0], 1e-12);
  }
  const auto f = poly(Domain::sphere(3), 2, [](std::span<const double> x) { return x[0] * x[1]; });
  const auto rep = laplace_beltrami_check(f, pts);
  EXPECT_LT(rep.residual, 1e-6);
  EXPECT_EQ(rep.samples, pts.size());
  EXPECT_EQ(rep.to_json()["identity"], "laplace_beltrami");
  EXPECT_THROW(laplace_beltrami_check(f, {Point{2.0, 0.0, 0.0}}), std::domain_error);
}

TEST(Identities, DmuDecomposition) {
  std::mt19937_64 rng(11);
  const auto pts = detail::random_ball_points(2, 10, 0.7, rng);
  const auto c = poly(Domain::ball(2), 0, [](std::span<const double>) { return 1.0; });
  EXPECT_LT(dmu_decomposition_check(c, 0.5, pts).residual, 1e-10);
  const auto x1 = poly(Domain::ball(2), 1, [](std::span<const double> x) { return x[0]; });
  EXPECT_LT(dmu_decomposition_check(x1, 0.5, pts).residual, 1e-8);
  // x1^2 - 1/5 is orthogonal to Pi_1 for W_1 on B^2, and D_1 of it is -10 times itself
  const auto B = ball_rule(2, 1.0, 4);
  const double mean = integrate(B, poly(Domain::ball(2), 2, [](std::span<const double> x) { return x[0] * x[0]; })) / B.mass();
  EXPECT_NEAR(mean, 0.2, 1e-14);
  const auto P = poly(Domain::ball(2), 2, [](std::span<const double> x) { return x[0] * x[0] - 0.2; });
  EXPECT_LT(dmu_decomposition_check(P, 1.0, pts).residual, 1e-8);
  for (const auto& x : pts) {
    const double dmu = 2.0 * (1.0 - x[0] * x[0]) - 4.0 * 2.0 * x[0] * x[0];
    EXPECT_NEAR(dmu, -10.0 * P(x), 1e-14);
    double rhs = dij_derivative(P, 1, 2, 2, x);
    rhs += detail::dii_nested(P, 1.0, 0, x, 0.01) + detail::dii_nested(P, 1.0, 1, x, 0.01);
    EXPECT_NEAR(rhs, -10.0 * P(x), 1e-8);
  }
  EXPECT_THROW(dmu_decomposition_check(P, 1.0, {Point{0.99, 0.0}}), std::domain_error);
}

TEST(Identities, DmuDecompositionProperty) {
  std::mt19937_64 rng(12);
  for (int d : {2, 3})
    for (double mu : {0.5, 1.0, 1.5}) {
      const auto g = Polynomial::random(d, 6, rng).as_function(Domain::ball(d));
      EXPECT_LT(dmu_decomposition_check(g, mu, detail::random_ball_points(d, 5, 0.7, rng)).residual, 1e-8);
    }
}

TEST(Identities, SimplexTransfer) {
  std::mt19937_64 rng(13);
  const auto us = detail::random_simplex_points(2, 8, 0.05, rng);
  const auto c = poly(Domain::ball(2), 0, [](std::span<const double>) { return 1.0; });
  EXPECT_LT(simplex_transfer_check(c, 0.5, us).residual, 1e-9);
  const auto a = poly(Domain::ball(2), 2, [](std::span<const double> x) { return x[0] * x[0]; });
  EXPECT_LT(simplex_transfer_check(a, 0.5, us).residual, 1e-6);
  const auto b = poly(Domain::ball(2), 4, [](std::span<const double> x) { return x[0] * x[0] * x[1] * x[1]; });
  EXPECT_LT(simplex_transfer_check(b, 1.0, us).residual, 1e-6);
  EXPECT_THROW(simplex_transfer_check(a, 0.5, {Point{0.0, 0.3}}), std::domain_error);
  EXPECT_THROW(simplex_transfer_check(a, 0.5, {Point{0.5, 0.5}}), std::domain_error);
}

TEST(Bernstein, GegenbauerOracle) {
  // phi d/dx C_n^mu has |.|_{2,mu}^2 = n(n + 2 mu) |C_n^mu|_{2,mu}^2
  for (double mu : {0.5, 1.0}) {
    double lo = inf, hi = 0.0;
    for (int n : {1, 4, 8, 16, 32}) {
      const auto P = gegenbauer_poly(n, mu);
      const auto rep = bernstein_check(P, 1, 2.0, mu, interval_rule(mu, 2 * n + 2));
      // monomial-basis cancellation grows like 2^n
      EXPECT_NEAR(rep.phi_ratio, std::sqrt(n * (n + 2.0 * mu)) / n, 1e-14 * std::pow(2.0, n) + 1e-12) << "n=" << n << " mu=" << mu;
      EXPECT_EQ(rep.dij_ratio, 0.0);
      if (n >= 4) {
        lo = std::min(lo, rep.phi_ratio);
        hi = std::max(hi, rep.phi_ratio);
      }
    }
    EXPECT_LT(hi / lo, 4.0);
  }
  const auto x1 = Polynomial::coordinate(1, 0);
  EXPECT_NEAR(bernstein_check(x1, 1, 2.0, 0.5, interval_rule(0.5, 4)).phi_ratio, std::sqrt(2.0), 1e-12);
  const auto rep0 = bernstein_check(Polynomial::constant(2, 3.0), 1, 2.0, 0.5, ball_rule(2, 0.5, 4));
  EXPECT_EQ(rep0.dij_ratio, 0.0);
  EXPECT_EQ(rep0.phi_ratio, 0.0);
  EXPECT_THROW(bernstein_check(x1, 1, 2.0, 1.0, interval_rule(0.5, 4)), std::domain_error);
}

TEST(Bernstein, RandomPolynomialRatiosStayBounded) {
  std::mt19937_64 rng(14);
  const auto c = check_bernstein(2, 1, 0.5, {4, 8, 16}, 5, rng);
  EXPECT_TRUE(c.pass) << c.to_json().dump();
  EXPECT_TRUE(std::isfinite(c.detail["fitted_c"].get<double>()));
}
