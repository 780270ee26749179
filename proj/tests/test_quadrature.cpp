#include "emod/mz.hpp"
#include "emod/quadrature.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace emod;

namespace {

// closed form of int_{S^{d-1}} x^a: 2 prod Gamma(b_i) / Gamma(sum b_i), b_i = (a_i + 1)/2
double sphere_monomial(const std::vector<int>& a) {
  double lg = 0.0, s = 0.0;
  for (int e : a) {
    if (e % 2) return 0.0;
    lg += std::lgamma((e + 1) / 2.0);
    s += (e + 1) / 2.0;
  }
  return 2.0 * std::exp(lg - std::lgamma(s));
}

// closed form of int_{B^d} x^a (1-|x|^2)^{mu-1/2} dx
double ball_monomial(const std::vector<int>& a, double mu) {
  double lg = 0.0, s = 0.0;
  for (int e : a) {
    if (e % 2) return 0.0;
    lg += std::lgamma((e + 1) / 2.0);
    s += (e + 1) / 2.0;
  }
  return std::exp(lg + std::lgamma(mu + 0.5) - std::lgamma(s + mu + 0.5));
}

FunctionHandle monomial(Domain dom, std::vector<int> a) {
  int deg = 0;
  for (int e : a) deg += e;
  return make_function(
      dom,
      [a](std::span<const double> x) {
        double v = 1.0;
        for (std::size_t k = 0; k < a.size(); ++k) v *= std::pow(x[k], a[k]);
        return v;
      },
      deg);
}

void all_exponents(int d, int n, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  if (static_cast<int>(cur.size()) == d - 1) {
    cur.push_back(n);
    out.push_back(cur);
    cur.pop_back();
    return;
  }
  for (int k = 0; k <= n; ++k) {
    cur.push_back(k);
    all_exponents(d, n - k, cur, out);
    cur.pop_back();
  }
}

std::vector<std::vector<int>> exponents_up_to(int d, int n) {
  std::vector<std::vector<int>> out;
  for (int m = 0; m <= n; ++m) {
    std::vector<int> cur;
    all_exponents(d, m, cur, out);
  }
  return out;
}

FunctionHandle one(Domain dom) {
  return make_function(dom, [](std::span<const double>) { return 1.0; }, 0);
}

}  // namespace

TEST(SphereRule, Examples) {
  EXPECT_NEAR(integrate(sphere_rule(3, 0), one(Domain::sphere(3))), 4.0 * pi, 1e-12);
  EXPECT_NEAR(integrate(sphere_rule(2, 4), one(Domain::sphere(2))), 2.0 * pi, 1e-12);
  EXPECT_NEAR(integrate(sphere_rule(4, 4), one(Domain::sphere(4))), 2.0 * pi * pi, 1e-12);
  EXPECT_NEAR(integrate(sphere_rule(3, 4), monomial(Domain::sphere(3), {2, 0, 0})), 4.0 * pi / 3.0, 1e-12);
  EXPECT_NEAR(integrate(sphere_rule(1, 3), monomial(Domain::sphere(1), {2})), 2.0, 1e-15);
  EXPECT_THROW(sphere_rule(0, 3), std::domain_error);
  EXPECT_THROW(sphere_rule(3, -1), std::domain_error);
}

TEST(BallRule, Examples) {
  EXPECT_NEAR(integrate(ball_rule(3, 0.5, 2), one(Domain::ball(3))), 4.0 * pi / 3.0, 1e-12);
  EXPECT_NEAR(integrate(ball_rule(2, 0.5, 2), one(Domain::ball(2))), pi, 1e-12);
  EXPECT_NEAR(integrate(interval_rule(0.5, 2), one(Domain::interval())), 2.0, 1e-14);
  EXPECT_NEAR(integrate(interval_rule(1.0, 2), one(Domain::interval())), pi / 2.0, 1e-14);
  EXPECT_NEAR(integrate(interval_rule(0.5, 4), monomial(Domain::interval(), {2})), 2.0 / 3.0, 1e-14);
}

TEST(SphereRule, ExactOnMonomialsProperty) {
  for (int d : {2, 3, 4, 5})
    for (int deg : {3, 6, 9}) {
      const auto R = sphere_rule(d, deg);
      for (const auto& a : exponents_up_to(d, deg)) {
        const double ref = sphere_monomial(a);
        EXPECT_NEAR(integrate(R, monomial(Domain::sphere(d), a)), ref, 1e-12 * std::max(1.0, std::abs(ref)))
            << "d=" << d << " deg=" << deg;
      }
    }
}

TEST(BallRule, ExactOnWeightedMonomialsProperty) {
  for (int d : {1, 2, 3})
    for (double mu : {0.0, 0.5, 1.0, 2.5})
      for (int deg : {4, 7}) {
        const auto R = ball_rule(d, mu, deg);
        for (const auto& a : exponents_up_to(d, deg)) {
          const double ref = ball_monomial(a, mu);
          EXPECT_NEAR(integrate(R, monomial(Domain::ball(d), a)), ref, 1e-12 * std::max(1.0, std::abs(ref)))
              << "d=" << d << " mu=" << mu << " deg=" << deg;
        }
      }
}

TEST(SphereRule, RefinementConvergesOnSmoothFunction) {
  const auto f = make_function(Domain::sphere(3), [](std::span<const double> x) { return std::exp(x[0]); });
  // int_{S^2} e^{x1} = 2 pi (e - 1/e)
  const double ref = 2.0 * pi * (std::exp(1.0) - std::exp(-1.0));
  double prev = std::abs(integrate(sphere_rule(3, 2), f) - ref);
  for (int deg : {4, 8, 16}) {
    const double err = std::abs(integrate(sphere_rule(3, deg), f) - ref);
    EXPECT_LE(err, prev);
    prev = err;
  }
  EXPECT_LT(prev, 1e-12);
}

TEST(SphereRule, PlaneRelabelingKeepsExactness) {
  const auto R = sphere_rule(4, 6);
  const auto P = rule_for_plane(R, 2, 4);
  EXPECT_EQ(P.circle_i, 1);
  EXPECT_EQ(P.circle_j, 3);
  for (const auto& a : exponents_up_to(4, 6))
    EXPECT_NEAR(integrate(P, monomial(Domain::sphere(4), a)), sphere_monomial(a), 1e-12);
}

TEST(Integrate, RejectsNonFiniteValues) {
  const auto f = make_function(Domain::sphere(3), [](std::span<const double> x) { return 1.0 / (x[0] - x[0]); });
  EXPECT_THROW(integrate(sphere_rule(3, 4), f), std::domain_error);
  EXPECT_THROW(lp_norm(sphere_rule(3, 4), f, 2.0), std::domain_error);
}

TEST(LpNorm, Examples) {
  const auto R = sphere_rule(3, 10);
  EXPECT_NEAR(lp_norm(R, one(Domain::sphere(3)), 2.0), std::sqrt(4.0 * pi), 1e-12);
  EXPECT_NEAR(lp_norm(R, one(Domain::sphere(3)), 1.0), 4.0 * pi, 1e-12);
  // |x1|_2^2 = 4 pi / 3
  EXPECT_NEAR(lp_norm(R, monomial(Domain::sphere(3), {1, 0, 0}), 2.0), std::sqrt(4.0 * pi / 3.0), 1e-12);
  // |x1|_1 = 2 pi
  const auto Rh = sphere_rule(3, 200);
  EXPECT_NEAR(lp_norm(Rh, monomial(Domain::sphere(3), {1, 0, 0}), 1.0), 2.0 * pi, 1e-4);
  EXPECT_THROW(lp_norm(R, one(Domain::sphere(3)), 0.5), std::domain_error);
}

TEST(LpNorm, SupRefinementFindsOffNodeMaximum) {
  // peak at e1, which is not a node of the rule
  const auto f = make_function(Domain::sphere(3), [](std::span<const double> x) { return std::exp(-10.0 * (1.0 - x[0])); });
  const auto R = sphere_rule(3, 6);
  double node_max = 0.0;
  for (std::size_t q = 0; q < R.size(); ++q) node_max = std::max(node_max, f(R.node(q)));
  EXPECT_LT(node_max, 1.0 - 1e-3);
  EXPECT_NEAR(lp_norm(R, f, std::numeric_limits<double>::infinity()), 1.0, 1e-9);
}

TEST(LpNorm, WeightedNormOfConstant) {
  const auto R = sphere_rule(3, 12);
  const auto w = WeightSpec::h_alpha({{0.0, 0.0, 1.0}}, {2.0});
  // int x3^2 = 4 pi / 3
  EXPECT_NEAR(lp_norm(R, one(Domain::sphere(3)), 1.0, w), 4.0 * pi / 3.0, 1e-12);
  EXPECT_THROW(WeightSpec::h_alpha({{0.0, 0.0, 2.0}}, {1.0}), std::domain_error);
  EXPECT_THROW(WeightSpec::h_alpha({{0.0, 0.0, 1.0}}, {0.0}), std::domain_error);
  EXPECT_THROW(WeightSpec::w_mu(-0.1), std::domain_error);
}

TEST(Doubling, UnitWeightCapHasClosedForm) {
  // n^2 * area of c(x, 1/n) on S^2 = n^2 2 pi (1 - cos(1/n))
  const auto w = WeightSpec::unit();
  for (int n : {1, 4, 16}) {
    const double ref = n * n * 2.0 * pi * (1.0 - std::cos(1.0 / n));
    EXPECT_NEAR(doubling_wn(w, n, Point{0.0, 0.6, 0.8}, 16), ref, 1e-12 * ref) << "n=" << n;
  }
  EXPECT_THROW(doubling_wn(w, 0, Point{1, 0, 0}, 16), std::domain_error);
}

TEST(Doubling, CapAverageOfSmoothWeightApproachesPointValue) {
  const auto base = WeightSpec::h_alpha({{1.0, 0.0, 0.0}}, {2.0});
  const Point x{0.6, 0.0, 0.8};
  for (int n : {32, 64}) {
    const double area = n * n * 2.0 * pi * (1.0 - std::cos(1.0 / n));
    EXPECT_NEAR(doubling_wn(base, n, x, 16) / area, 0.36, 2.0 / (n * n)) << "n=" << n;
  }
  const auto W = WeightSpec::doubling(base, 8);
  EXPECT_NEAR(W(x), doubling_wn(base, 8, x, 16), 1e-15);
}

TEST(SeparatedSet, Examples) {
  EXPECT_EQ(separated_set(3, pi).centers.size(), 1u);
  const auto S = separated_set(3, pi / 2);
  EXPECT_GE(S.centers.size(), 4u);
  EXPECT_LE(S.centers.size(), 6u);
  EXPECT_THROW(separated_set(1, 0.5), std::domain_error);
  EXPECT_THROW(separated_set(3, 0.0), std::domain_error);
}

TEST(SeparatedSet, SeparationAndCoveringProperty) {
  for (int d : {2, 3, 4})
    for (double delta : {0.6, 0.3}) {
      const auto S = separated_set(d, delta);
      for (std::size_t a = 0; a < S.centers.size(); ++a) {
        EXPECT_NEAR(norm(S.centers[a]), 1.0, 1e-12);
        for (std::size_t b = a + 1; b < S.centers.size(); ++b)
          EXPECT_GE(geodesic_distance(S.centers[a], S.centers[b]), delta - 1e-12);
      }
      // maximality: every test point lies within delta of a center
      const auto R = sphere_rule(d, 9);
      for (std::size_t q = 0; q < R.size(); ++q) {
        Point x(R.node(q).begin(), R.node(q).end());
        double best = 10.0;
        for (const auto& c : S.centers) best = std::min(best, geodesic_distance(x, c));
        EXPECT_LT(best, delta + 1e-12) << "d=" << d << " delta=" << delta;
      }
    }
}

TEST(MZ, SumsBracketTheNorm) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> N(0.0, 1.0);
  const double c0 = N(rng), c1 = N(rng), c2 = N(rng);
  const auto f = make_function(
      Domain::sphere(3), [=](std::span<const double> x) { return c0 + c1 * x[0] * x[1] + c2 * x[2] * x[2] * x[2]; }, 3);
  const auto m = mz_sums(f, 3, 1.0, 2.0, 60);
  EXPECT_TRUE(m.brackets());
  EXPECT_GT(m.lower, 0.0);
  EXPECT_LT(m.factor(), 10.0);
  const auto R = sphere_rule(3, 12);
  EXPECT_NEAR(m.norm_pp, std::pow(lp_norm(R, f, 2.0), 2.0), 1e-10 * m.norm_pp);
}

TEST(RuleCsv, HeaderAndRows) {
  const auto R = interval_rule(0.5, 3);
  std::ostringstream os;
  write_rule_csv(os, R);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line.rfind("# domain=", 0), 0u);
  std::getline(is, line);
  EXPECT_EQ(line, "w,x1");
  std::size_t rows = 0;
  double mass = 0.0;
  while (std::getline(is, line)) {
    ++rows;
    mass += std::stod(line.substr(0, line.find(',')));
  }
  EXPECT_EQ(rows, R.size());
  EXPECT_NEAR(mass, 2.0, 1e-14);
}
