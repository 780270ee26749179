#include "emod/rates.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace emod;

namespace {

RateCurve model_curve(double lo, double hi, int steps, const std::function<double(double)>& f) {
  RateCurve c;
  c.id = "model";
  for (int k = 0; k < steps; ++k) {
    const double t = hi * std::pow(lo / hi, static_cast<double>(k) / (steps - 1));
    c.scales.push_back(t);
    c.values.push_back(f(t));
  }
  return c;
}

ExampleSpec spec(const std::string& id, double alpha, int d = 3) {
  ExampleSpec s;
  s.id = id;
  s.params.alpha = alpha;
  s.params.d = d;
  return s;
}

}  // namespace

TEST(FitLogLog, Examples) {
  const auto pw = model_curve(std::pow(2.0, -9), 0.125, 13, [](double t) { return 3.0 * std::pow(t, 1.5); });
  const auto f = fit_loglog(pw);
  EXPECT_NEAR(f.slope, 1.5, 1e-12);
  EXPECT_NEAR(std::exp(f.intercept), 3.0, 1e-11);
  EXPECT_LT(f.max_rel_residual, 1e-12);
  EXPECT_EQ(f.window_lo, 2u);
  EXPECT_EQ(f.window_hi, 11u);
  const auto c = model_curve(0.001, 0.1, 8, [](double) { return 0.7; });
  EXPECT_NEAR(fit_loglog(c).slope, 0.0, 1e-12);
  const auto lg = model_curve(std::pow(2.0, -12), std::pow(2.0, -6), 13,
                              [](double t) { return t * t * std::sqrt(std::abs(std::log(t))); });
  // the log factor lowers the slope: d log f / d log t = 2 - 1 / (2 |log t|), about 1.92 mid-window
  const double s = fit_loglog(lg, 0, lg.size()).slope;
  EXPECT_NEAR(s, 2.0 - 1.0 / (2.0 * 9.0 * std::log(2.0)), 0.01);
  EXPECT_LT(s, 2.0);
}

TEST(FitLogLog, Errors) {
  auto c = model_curve(0.01, 0.1, 7, [](double t) { return t; });
  EXPECT_THROW(fit_loglog(c), std::invalid_argument);
  EXPECT_THROW(fit_loglog(c, 2, 5), std::invalid_argument);
  EXPECT_NO_THROW(fit_loglog(c, 1, 5));
  c.values[3] = 0.0;
  EXPECT_THROW(fit_loglog(c, 0, 7), std::domain_error);
}

TEST(RateCurve, ValidationAndMonotonicity) {
  auto c = model_curve(0.01, 0.1, 5, [](double t) { return t; });
  EXPECT_NO_THROW(c.validate());
  EXPECT_TRUE(c.monotone());
  c.values[2] *= 1.01;  // inside the 2% allowance
  EXPECT_TRUE(c.monotone());
  c.values[2] *= 3.0;
  EXPECT_FALSE(c.monotone());
  c.values[1] = -1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  auto d = model_curve(0.01, 0.1, 5, [](double t) { return t; });
  std::swap(d.scales[0], d.scales[1]);
  EXPECT_THROW(d.validate(), std::invalid_argument);
}

TEST(ExampleSpec, ValidationErrors) {
  EXPECT_THROW(spec("S2", -0.8).validate(), ValidationError);
  EXPECT_NO_THROW(spec("S2", -0.4).validate());
  try {
    spec("B2", 0.0, 2).validate();
    FAIL() << "zero exponent accepted";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("zero exponent excluded"), std::string::npos);
  }
  EXPECT_THROW(spec("S1", 1.2).validate(), ValidationError);
  EXPECT_THROW(spec("S3", 0.3, 4).validate(), ValidationError);
  EXPECT_THROW(spec("Q9", 0.3).validate(), ValidationError);
  auto b = spec("B2", 0.25, 2);
  b.params.mu = 0.3;
  EXPECT_THROW(b.validate(), ValidationError);
  b.params.mu = 1.0;
  EXPECT_NO_THROW(b.validate());
  auto l = spec("L1", 0.25, 1);
  l.params.mu = 0.0;
  EXPECT_THROW(l.validate(), ValidationError);
  auto s = spec("S2", 0.25);
  s.params.p = 0.5;
  EXPECT_THROW(s.validate(), ValidationError);
  s.params.p = 2.0;
  s.tmin = 0.0;
  EXPECT_THROW(s.validate(), ValidationError);
  auto e = spec("E2", 0.25);
  e.nmax = 4;
  EXPECT_THROW(e.validate(), ValidationError);
}

TEST(ExampleSpec, ExpectedExponentsAndRegimes) {
  EXPECT_DOUBLE_EQ(spec("S2", 0.25).expected_exponent(), 1.5);
  EXPECT_EQ(spec("S2", 0.25).regime(), "power");
  EXPECT_EQ(spec("S2", 0.5).regime(), "log");
  EXPECT_DOUBLE_EQ(spec("S2", 0.5).expected_exponent(), 2.0);
  EXPECT_EQ(spec("S2", 0.9).regime(), "saturated");
  EXPECT_DOUBLE_EQ(spec("S2", 0.9).expected_exponent(), 2.0);
  EXPECT_DOUBLE_EQ(spec("E2", 0.25).expected_exponent(), -1.5);
  EXPECT_DOUBLE_EQ(spec("S1", 0.25).expected_exponent(), 0.75);
  EXPECT_DOUBLE_EQ(spec("B2", 0.25, 2).expected_exponent(), 1.5);
  EXPECT_DOUBLE_EQ(spec("B4", 0.2, 2).expected_exponent(), 1.4);
  EXPECT_DOUBLE_EQ(spec("E6", 0.2, 2).expected_exponent(), -1.4);
  auto l = spec("L1", 0.25, 1);
  EXPECT_DOUBLE_EQ(l.expected_exponent(), 1.5);
  auto s4 = spec("S4", 0.25);
  s4.params.y0 = 0.5;
  EXPECT_EQ(s4.regime(), "saturated");
  auto e4 = s4;
  e4.id = "E4";
  EXPECT_EQ(e4.regime(), "analytic");
  EXPECT_TRUE(std::isnan(e4.expected_exponent()));
}

TEST(ExampleSpec, Grids) {
  const auto s = spec("S2", 0.25);
  const auto ts = s.t_grid();
  ASSERT_EQ(ts.size(), 13u);
  EXPECT_DOUBLE_EQ(ts.front(), 0.125);
  EXPECT_NEAR(ts.back(), std::pow(2.0, -9), 1e-18);
  const auto ns = spec("E2", 0.25).n_grid();
  EXPECT_EQ(ns, (std::vector<int>{8, 10, 11, 13, 16, 19, 23, 27, 32, 38, 45, 54, 64}));
}

TEST(Catalog, EntriesAndLookup) {
  EXPECT_EQ(catalog().size(), 15u);
  for (const auto& e : catalog()) {
    EXPECT_EQ(&catalog_entry(e.id), &e);
    EXPECT_FALSE(e.exponent.empty());
  }
  EXPECT_THROW(catalog_entry("S9"), ValidationError);
}

TEST(RunExample, IntervalModulusRate) {
  auto s = spec("L1", 0.25, 1);
  s.tmin = std::pow(2.0, -9);
  s.tmax = std::pow(2.0, -4);
  s.tsteps = 11;
  const auto r = run_example(s);
  EXPECT_NEAR(r.fit.slope, 1.5, 0.1);
  EXPECT_TRUE(r.curve.monotone());
  EXPECT_EQ(r.regime, "power");
  // bit-identical rerun
  const auto again = run_example(s);
  EXPECT_EQ(again.curve.values, r.curve.values);
  EXPECT_EQ(again.fit.slope, r.fit.slope);
}

TEST(RunExample, SphereBestApproximationRate) {
  const auto r = run_example(spec("E2", 0.25));
  EXPECT_NEAR(r.fit.slope, -1.5, 0.15);
  EXPECT_TRUE(r.curve.by_degree);
  EXPECT_TRUE(r.curve.monotone());
  EXPECT_LT(r.quad_error, 1e-3);
}

TEST(RunExample, PolynomialInputIsReproducedExactly) {
  // alpha = 1 makes the S2 function linear, so E_n vanishes for every n >= 2
  const auto r = run_example(spec("E2", 1.0));
  for (double v : r.curve.values) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(r.note, "all values vanish: exact reproduction");
  EXPECT_EQ(r.fit.window_hi, 0u);
}

TEST(RunExample, FixedRuleMatchesAdaptive) {
  auto s = spec("L1", 0.75, 1);
  s.tmax = 0.125;
  s.tmin = 1.0 / 32;
  s.tsteps = 3;
  const auto a = run_example(s);
  s.quad_degree = 200;
  const auto b = run_example(s);
  EXPECT_EQ(b.method, "fixed rule of degree 200");
  ASSERT_EQ(a.curve.size(), b.curve.size());
  for (std::size_t k = 0; k < a.curve.size(); ++k) EXPECT_NEAR(b.curve.values[k], a.curve.values[k], 5e-2 * a.curve.values[k]);
}

TEST(RunExample, HigherOrderModulusIsBoundedProperty) {
  // omega_3 <= 2 omega_2 pointwise, with the fibered tolerance as allowance
  for (const auto& s : {spec("S2", 0.25), spec("L1", 0.25, 1)}) {
    ModulusRequest req;
    req.f = example_function(s);
    req.variant = example_variant(s);
    req.mu = s.params.mu;
    req.r = 2;
    ModulusEngine w2(req);
    req.r = 3;
    ModulusEngine w3(req);
    for (double t : {0.125, 1.0 / 32})
      EXPECT_LE(w3(t), 2.0 * w2(t) * 1.02) << s.id << " t=" << t;
  }
}

TEST(Records, CsvAndJson) {
  auto s = spec("E2", 0.25);
  s.nmax = 16;
  const auto r = run_example(s);
  const nlohmann::json config = {{"command", "approx"}, {"example", "E2"}};
  std::ostringstream os;
  write_curve_csv(os, r, config, 7);
  std::istringstream is(os.str());
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(is, line)) lines.push_back(line);
  ASSERT_EQ(lines.size(), 5 + r.curve.size());
  EXPECT_EQ(lines[0], std::string("# emod ") + kVersion);
  EXPECT_EQ(lines[1], "# seed=7");
  EXPECT_EQ(lines[2], "# config=" + config.dump());
  EXPECT_EQ(lines[4], "n,value");
  EXPECT_EQ(std::stod(lines[5].substr(lines[5].find(',') + 1)), r.curve.values[0]);
  const auto j = fit_record(r, config, 7);
  EXPECT_EQ(j["id"], "E2");
  EXPECT_EQ(j["seed"], 7);
  EXPECT_EQ(j["version"], kVersion);
  EXPECT_DOUBLE_EQ(j["expected_exponent"].get<double>(), -1.5);
  EXPECT_DOUBLE_EQ(j["fit"]["slope"].get<double>(), r.fit.slope);
  EXPECT_EQ(j["quantity"], "E_n");
}
