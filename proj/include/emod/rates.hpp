#pragma once

#include "emod/approximation.hpp"
#include "emod/core_math.hpp"
#include "emod/harmonic.hpp"
#include "emod/quadrature.hpp"
#include "emod/smoothness.hpp"
#include "emod/version.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <memory>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace emod {

// Parameters outside an example's validity strip.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------------------
// Curves and fits

struct ExampleParams {
  int d = 3;
  double p = 2.0;
  double mu = 0.5;
  double alpha = 0.25;
  int r = 2;
  double y0 = 1.0;            // S4/E4: y_0 = y0 e_1
  bool y0_follows_t = false;  // S4/E4: y_0 = (1 - t) e_1, with t = 1/n for E4
};

inline nlohmann::json to_json(const ExampleParams& p) {
  return {{"d", p.d}, {"p", std::isinf(p.p) ? nlohmann::json("inf") : nlohmann::json(p.p)}, {"mu", p.mu},
          {"alpha", p.alpha}, {"r", p.r}, {"y0", p.y0}, {"y0_follows_t", p.y0_follows_t}};
}

struct RateCurve {
  std::string id;
  ExampleParams params;
  bool by_degree = false;     // samples are (n, E_n) instead of (t, omega)
  std::vector<double> scales;  // t strictly decreasing, or n strictly increasing
  std::vector<double> values;

  std::size_t size() const { return scales.size(); }

  void validate() const {
    if (scales.size() != values.size()) throw std::invalid_argument("RateCurve: scales and values differ in length");
    for (std::size_t k = 1; k < scales.size(); ++k) {
      const bool ok = by_degree ? scales[k] > scales[k - 1] : scales[k] < scales[k - 1];
      if (!ok) throw std::invalid_argument("RateCurve: scales are not strictly monotone");
    }
    for (double v : values)
      if (!(v >= 0.0)) throw std::invalid_argument("RateCurve: negative or non-finite value");
  }

  // nondecreasing in t (equivalently nonincreasing in n), up to relative slack
  bool monotone(double slack = 0.02) const {
    for (std::size_t k = 1; k < values.size(); ++k)
      if (values[k] > values[k - 1] * (1.0 + slack)) return false;
    return true;
  }
};

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double max_rel_residual = 0.0;
  std::size_t window_lo = 0;  // [lo, hi) into the curve
  std::size_t window_hi = 0;

  nlohmann::json to_json() const {
    return {{"slope", slope}, {"intercept", intercept}, {"max_rel_residual", max_rel_residual},
            {"window", {window_lo, window_hi}}};
  }
};

// Least-squares line through (log scale, log value) on samples [lo, hi).
inline RateFit fit_loglog(const RateCurve& c, std::size_t lo, std::size_t hi) {
  if (hi > c.size() || lo >= hi || hi - lo < 4) throw std::invalid_argument("fit_loglog: need at least 4 samples in the window");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(hi - lo);
  for (std::size_t k = lo; k < hi; ++k) {
    if (!(c.values[k] > 0.0) || !std::isfinite(c.values[k]))
      throw std::domain_error("fit_loglog: nonpositive value in the window (the quantity vanished)");
    const double x = std::log(c.scales[k]), y = std::log(c.values[k]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  RateFit f;
  f.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  f.intercept = (sy - f.slope * sx) / n;
  f.window_lo = lo;
  f.window_hi = hi;
  for (std::size_t k = lo; k < hi; ++k) {
    const double model = std::exp(f.intercept + f.slope * std::log(c.scales[k]));
    f.max_rel_residual = std::max(f.max_rel_residual, std::abs(c.values[k] / model - 1.0));
  }
  return f;
}

// Default window: drop `trim` samples at each end.
inline RateFit fit_loglog(const RateCurve& c, std::size_t trim = 2) {
  if (c.size() < 2 * trim + 4) throw std::invalid_argument("fit_loglog: curve too short for the default window");
  return fit_loglog(c, trim, c.size() - trim);
}

// ---------------------------------------------------------------------------
// Catalog

enum class Quantity { modulus, best_approx };

struct CatalogEntry {
  std::string id;
  std::string function;
  std::string quantity;
  std::string exponent;
  std::string strip;
};

inline const std::vector<CatalogEntry>& catalog() {
  static const std::vector<CatalogEntry> c = {
      {"S1", "prod_i |x_i|^alpha on S^{d-1}", "omega_r", "alpha + 1/p", "0 < alpha < 1"},
      {"S2", "(1 - x_1)^alpha on S^{d-1}", "omega_r", "min(2 alpha + (d-1)/p, r)",
       "alpha > -(d-1)/(2p), alpha != 0; power regime below alpha = (r - (d-1)/p)/2"},
      {"S3", "(x_1^2 + x_2^2)^alpha on S^2", "omega_r", "min(2 alpha + 2/p, r)", "alpha > -1/p, alpha != 0, d = 3"},
      {"S4", "|x - y0 e_1|^{2 alpha} on S^{d-1}", "omega_r",
       "min(2 alpha + (d-1)/p, r) for y0 = 1 or y0 = 1 - t, r otherwise",
       "alpha > -(d-1)/(2p), alpha != 0, y0 >= 0"},
      {"L1", "(1 - x)^alpha on [-1,1], weight (1-x^2)^{mu-1/2}", "Omega_r", "min(2 alpha + (2 mu + 1)/p, r)",
       "alpha > -(2 mu + 1)/(2p), alpha != 0, mu = (m-1)/2 > 0"},
      {"B1", "(1 - |x|^2 + |x - e_1|^2)^alpha on B^d", "omega_r", "min(2 alpha + (d+1)/p, r)",
       "alpha > -(d+1)/(2p), alpha != 0"},
      {"B2", "(1 - |x|^2)^alpha on B^d", "omega_r", "min(2 alpha + 2/p, r)", "alpha > -1/p, alpha != 0"},
      {"B3", "prod_i |x_i|^alpha on B^d", "omega_r", "alpha + 1/p", "0 < alpha < 1"},
      {"B4", "|x - e_1|^{2 alpha} on B^d", "omega_r", "min(2 alpha + d/p, r)", "alpha > -d/(2p), alpha != 0"},
      {"E1", "S1 function", "E_n", "-(alpha + 1/p)", "as S1"},
      {"E2", "S2 function", "E_n", "-(2 alpha + (d-1)/p)", "as S2"},
      {"E3", "S3 function", "E_n", "-(2 alpha + 2/p)", "as S3"},
      {"E4", "S4 function", "E_n", "-(2 alpha + (d-1)/p) for y0 = 1 or y0 = 1 - 1/n; faster than any power otherwise",
       "as S4"},
      {"E5", "B2 function", "E_n", "-(2 alpha + 2/p)", "as B2"},
      {"E6", "B4 function", "E_n", "-(2 alpha + d/p)", "as B4"},
  };
  return c;
}

inline const CatalogEntry& catalog_entry(const std::string& id) {
  for (const auto& e : catalog())
    if (e.id == id) return e;
  throw ValidationError("unknown example id '" + id + "'");
}

struct ExampleSpec {
  std::string id = "S2";
  ExampleParams params;
  double tmin = std::pow(2.0, -9);
  double tmax = std::pow(2.0, -3);
  int tsteps = 13;
  int nmin = 8;
  int nmax = 64;
  int quad_degree = 0;  // 0: adaptive fibered moduli and graded analyzers; otherwise fixed rules of this degree
  std::size_t trim = 2;

  Quantity quantity() const { return id[0] == 'E' ? Quantity::best_approx : Quantity::modulus; }

  // the modulus example whose function this entry uses
  std::string base_id() const {
    if (id == "E1") return "S1";
    if (id == "E2") return "S2";
    if (id == "E3") return "S3";
    if (id == "E4") return "S4";
    if (id == "E5") return "B2";
    if (id == "E6") return "B4";
    return id;
  }

  DomainKind domain_kind() const {
    const auto b = base_id();
    if (b[0] == 'S') return DomainKind::sphere;
    if (b == "L1") return DomainKind::interval;
    return DomainKind::ball;
  }

  // threshold and 1/p-weighted dimension term of the exponent 2 alpha + c/p (or alpha + 1/p)
  double dim_term() const {
    const auto b = base_id();
    const int d = params.d;
    if (b == "S2" || b == "S4") return d - 1.0;
    if (b == "S3" || b == "B2") return 2.0;
    if (b == "L1") return 2.0 * params.mu + 1.0;
    if (b == "B1") return d + 1.0;
    if (b == "B4") return static_cast<double>(d);
    return 1.0;
  }

  bool product_type() const { return base_id() == "S1" || base_id() == "B3"; }
  bool smooth_s4() const { return base_id() == "S4" && !params.y0_follows_t && params.y0 != 1.0; }

  // uncapped exponent of the example's singularity
  double raw_exponent() const {
    const double ip = std::isinf(params.p) ? 0.0 : 1.0 / params.p;
    if (product_type()) return params.alpha + ip;
    return 2.0 * params.alpha + dim_term() * ip;
  }

  // "power", "log" (boundary of the power regime), "saturated" or "analytic"
  std::string regime() const {
    if (smooth_s4()) return quantity() == Quantity::modulus ? "saturated" : "analytic";
    if (quantity() == Quantity::best_approx) return "power";
    const double e = raw_exponent();
    if (std::abs(e - params.r) < 1e-12) return "log";
    return e < params.r ? "power" : "saturated";
  }

  // expected slope of log(value) against log(scale); NaN when no power law is expected
  double expected_exponent() const {
    const auto reg = regime();
    if (reg == "analytic") return std::numeric_limits<double>::quiet_NaN();
    if (quantity() == Quantity::best_approx) return -raw_exponent();
    if (reg == "saturated") return params.r;
    return raw_exponent();
  }

  void validate() const {
    const auto& e = catalog_entry(id);
    const auto& P = params;
    const auto b = base_id();
    auto fail = [&](const std::string& why) { throw ValidationError(id + ": " + why + " (validity strip: " + e.strip + ")"); };
    if (!(P.p >= 1.0)) fail("p must be >= 1");
    if (P.r < 1) fail("r must be >= 1");
    if (P.alpha == 0.0) throw ValidationError(id + ": zero exponent excluded (the modulus vanishes identically)");
    if (!std::isfinite(P.alpha)) fail("alpha must be finite");
    const double ip = std::isinf(P.p) ? 0.0 : 1.0 / P.p;
    if (product_type()) {
      if (!(P.alpha > 0.0 && P.alpha < 1.0)) fail("alpha outside (0, 1)");
    } else if (!(P.alpha > -0.5 * dim_term() * ip)) {
      fail("alpha at or below the integrability bound");
    }
    switch (domain_kind()) {
      case DomainKind::sphere:
        if (P.d < 3) fail("d must be >= 3");
        if (b == "S3" && P.d != 3) fail("d must be 3");
        if (b == "S4" && !(P.y0 >= 0.0)) fail("y0 must be >= 0");
        break;
      case DomainKind::ball:
        if (P.d < 2) fail("d must be >= 2");
        [[fallthrough]];
      case DomainKind::interval: {
        const double m = 2.0 * P.mu + 1.0;
        if (!(P.mu >= 0.0) || std::abs(m - std::round(m)) > 1e-12) fail("mu must be (m-1)/2 with m a positive integer");
        if (b == "L1" && !(P.mu > 0.0)) fail("mu must be positive");
        if (b == "L1" && P.d != 1) fail("d must be 1");
        break;
      }
    }
    if (quantity() == Quantity::modulus) {
      if (!(tmin > 0.0 && tmax >= tmin && tmax <= pi)) fail("t grid must satisfy 0 < tmin <= tmax <= pi");
      if (tsteps < 1) fail("tsteps must be >= 1");
    } else {
      if (nmin < 1 || nmax < nmin) fail("n grid must satisfy 1 <= nmin <= nmax");
    }
    if (quad_degree < 0) fail("quadrature degree must be >= 0");
  }

  // t_k geometric from tmax down to tmin
  std::vector<double> t_grid() const {
    std::vector<double> g;
    if (tsteps == 1) return {tmax};
    for (int k = 0; k < tsteps; ++k) g.push_back(tmax * std::pow(tmin / tmax, static_cast<double>(k) / (tsteps - 1)));
    return g;
  }

  // round(nmin 2^{k/4}) up to nmax, duplicates removed
  std::vector<int> n_grid() const {
    std::vector<int> g;
    for (int k = 0;; ++k) {
      const int n = static_cast<int>(std::lround(nmin * std::pow(2.0, 0.25 * k)));
      if (n > nmax) break;
      if (g.empty() || n > g.back()) g.push_back(n);
    }
    if (g.empty() || g.back() != nmax) g.push_back(nmax);
    return g;
  }
};

// The example's function; t only matters for S4/E4 with y0 = (1 - t) e_1.
inline FunctionHandle example_function(const ExampleSpec& spec, double t = 0.0) {
  const auto b = spec.base_id();
  const auto& P = spec.params;
  const int d = P.d;
  const double a = P.alpha;
  FunctionHandle f;
  if (b == "S1" || b == "B3") {
    f = make_function(b == "S1" ? Domain::sphere(d) : Domain::ball(d), [a](std::span<const double> x) {
      double v = 1.0;
      for (double c : x) v *= std::pow(std::abs(c), a);
      return v;
    });
    for (int k = 1; k <= d; ++k) f.features.hyperplanes.push_back(k);
  } else if (b == "S2") {
    f = make_function(Domain::sphere(d), [a](std::span<const double> x) { return std::pow(std::max(0.0, 1.0 - x[0]), a); });
    Point e(d, 0.0);
    e[0] = 1.0;
    f.features.points.push_back(e);
  } else if (b == "S3") {
    f = make_function(Domain::sphere(3), [a](std::span<const double> x) { return std::pow(x[0] * x[0] + x[1] * x[1], a); });
    f.features.points = {{0.0, 0.0, 1.0}, {0.0, 0.0, -1.0}};
  } else if (b == "S4") {
    const double y0 = P.y0_follows_t ? 1.0 - t : P.y0;
    f = make_function(Domain::sphere(d), [a, y0](std::span<const double> x) {
      double s = (x[0] - y0) * (x[0] - y0);
      for (std::size_t k = 1; k < x.size(); ++k) s += x[k] * x[k];
      return std::pow(s, a);
    });
    if (y0 > 0.5) {
      Point e(d, 0.0);
      e[0] = 1.0;
      f.features.points.push_back(e);
    }
  } else if (b == "L1") {
    f = make_function(Domain::interval(), [a](std::span<const double> x) { return std::pow(std::max(0.0, 1.0 - x[0]), a); });
    f.features.points = {{1.0}};
    f.features.boundary = true;
  } else if (b == "B1") {
    f = make_function(Domain::ball(d), [a](std::span<const double> x) {
      return std::pow(std::max(0.0, 2.0 - 2.0 * x[0]), a);
    });
    Point e(d, 0.0);
    e[0] = 1.0;
    f.features.points.push_back(e);
  } else if (b == "B2") {
    f = make_function(Domain::ball(d), [a](std::span<const double> x) { return std::pow(std::max(0.0, 1.0 - norm2(x)), a); });
    f.features.boundary = true;
  } else if (b == "B4") {
    f = make_function(Domain::ball(d), [a](std::span<const double> x) {
      double s = (x[0] - 1.0) * (x[0] - 1.0);
      for (std::size_t k = 1; k < x.size(); ++k) s += x[k] * x[k];
      return std::pow(s, a);
    });
    Point e(d, 0.0);
    e[0] = 1.0;
    f.features.points.push_back(e);
  } else {
    throw ValidationError("example_function: unknown example '" + spec.id + "'");
  }
  return f;
}

inline ModulusVariant example_variant(const ExampleSpec& spec) {
  switch (spec.domain_kind()) {
    case DomainKind::sphere: return ModulusVariant::sphere;
    case DomainKind::interval: return ModulusVariant::interval;
    default: return ModulusVariant::ball;
  }
}

// ---------------------------------------------------------------------------
// Running examples

struct RunOptions {
  FiberOptions fiber;
  AnalyzerOptions analyzer;
  bool estimate_error = true;  // best-approximation curves: rerun on a coarser grid to estimate quadrature error
};

struct ExampleResult {
  RateCurve curve;
  RateFit fit;
  double expected = 0.0;
  std::string regime;
  double quad_error = 0.0;  // estimated relative quadrature error of the curve values
  std::string method;
  std::string note;

  nlohmann::json to_json() const {
    nlohmann::json j = {{"id", curve.id},
                        {"params", emod::to_json(curve.params)},
                        {"quantity", curve.by_degree ? "E_n" : "modulus"},
                        {"regime", regime},
                        {"expected_exponent", std::isnan(expected) ? nlohmann::json(nullptr) : nlohmann::json(expected)},
                        {"quad_error_estimate", quad_error},
                        {"method", method}};
    if (fit.window_hi > 0) j["fit"] = fit.to_json();
    if (!note.empty()) j["note"] = note;
    return j;
  }
};

namespace detail {

// E_n(f)_2 for n in ns from one orthogonal expansion, when an analyzer covers the domain
inline bool analyzer_curve(const FunctionHandle& f, const ExampleSpec& spec, const std::vector<int>& ns,
                           const AnalyzerOptions& opt, std::vector<double>& out) {
  const auto& P = spec.params;
  if (P.p != 2.0) return false;
  const int L = ns.back();
  out.clear();
  if (f.domain.kind == DomainKind::sphere && f.domain.d == 3) {
    auto an = analyze_sphere2(f, L, 2, opt);
    for (int n : ns) out.push_back(an.best_approx(n));
    return true;
  }
  if (f.domain.kind == DomainKind::ball && f.domain.d == 2 && P.mu > 0.0) {
    auto an = analyze_disk(f, L, P.mu, opt);
    for (int n : ns) out.push_back(an.best_approx(n));
    return true;
  }
  if (f.domain.kind == DomainKind::interval && P.mu > 0.0) {
    auto an = analyze_interval(f, L, P.mu, opt);
    for (int n : ns) out.push_back(an.best_approx(n));
    return true;
  }
  return false;
}

inline QuadratureRule example_rule(const ExampleSpec& spec, int degree) {
  if (spec.domain_kind() == DomainKind::sphere) return sphere_rule(spec.params.d, degree);
  return ball_rule(spec.domain_kind() == DomainKind::interval ? 1 : spec.params.d, spec.params.mu, degree);
}

}  // namespace detail

inline ExampleResult run_example(const ExampleSpec& spec, const RunOptions& opt = {}) {
  spec.validate();
  ExampleResult res;
  res.curve.id = spec.id;
  res.curve.params = spec.params;
  res.expected = spec.expected_exponent();
  res.regime = spec.regime();
  const auto& P = spec.params;
  if (spec.quantity() == Quantity::modulus) {
    const auto ts = spec.t_grid();
    res.curve.scales = ts;
    ModulusRequest req;
    req.r = P.r;
    req.p = P.p;
    req.mu = P.mu;
    req.variant = example_variant(spec);
    std::unique_ptr<QuadratureRule> rule;
    if (spec.quad_degree > 0) rule = std::make_unique<QuadratureRule>(detail::example_rule(spec, spec.quad_degree));
    res.method = rule ? "fixed rule of degree " + std::to_string(spec.quad_degree) : "adaptive fibered integration";
    if (spec.base_id() == "S4" && P.y0_follows_t) {
      for (double t : ts) {
        req.f = example_function(spec, t);
        req.t = t;
        ModulusEngine eng(req, opt.fiber, rule.get());
        res.curve.values.push_back(eng(t));
      }
    } else {
      req.f = example_function(spec);
      ModulusEngine eng(req, opt.fiber, rule.get());
      res.curve.values = eng.curve(ts);
    }
    res.quad_error = rule ? 0.0 : opt.fiber.rel_tol;
  } else {
    res.curve.by_degree = true;
    const auto ns = spec.n_grid();
    for (int n : ns) res.curve.scales.push_back(n);
    auto eval = [&](const AnalyzerOptions& aopt, std::vector<double>& out) {
      out.clear();
      if (spec.quad_degree == 0 && !(spec.base_id() == "S4" && P.y0_follows_t)) {
        if (detail::analyzer_curve(example_function(spec), spec, ns, aopt, out)) return std::string("orthogonal expansion on graded grids");
      }
      if (spec.quad_degree == 0 && P.p == 2.0 && spec.base_id() == "S4" && P.y0_follows_t && P.d == 3) {
        std::vector<double> one;
        for (int n : ns) {
          if (!detail::analyzer_curve(example_function(spec, 1.0 / n), spec, {n}, aopt, one)) break;
          out.push_back(one[0]);
        }
        if (out.size() == ns.size()) return std::string("orthogonal expansion on graded grids, one per n");
        out.clear();
      }
      const int deg = spec.quad_degree > 0 ? spec.quad_degree : 4 * ns.back();
      const auto R = detail::example_rule(spec, deg);
      const auto variant = spec.domain_kind() == DomainKind::sphere ? ApproxVariant::sphere : ApproxVariant::ball;
      for (int n : ns) {
        const double t = 1.0 / n;
        out.push_back(best_approx(example_function(spec, t), n, P.p, R, variant, P.mu));
      }
      return std::string(P.p == 2.0 ? "projection on a fixed rule of degree " : "|f - V_{n/2} f|_p on a fixed rule of degree ") +
             std::to_string(deg);
    };
    res.method = eval(opt.analyzer, res.curve.values);
    if (opt.estimate_error && res.method.rfind("orthogonal", 0) == 0) {
      AnalyzerOptions coarse = opt.analyzer;
      coarse.panel_points = std::max(8, (3 * coarse.panel_points) / 4);
      std::vector<double> alt;
      eval(coarse, alt);
      for (std::size_t k = 0; k < alt.size(); ++k)
        if (res.curve.values[k] > 0.0)
          res.quad_error = std::max(res.quad_error, std::abs(alt[k] / res.curve.values[k] - 1.0));
    }
  }
  res.curve.validate();
  bool vanished = true;
  for (double v : res.curve.values) vanished = vanished && v == 0.0;
  if (vanished) {
    res.note = "all values vanish: exact reproduction";
  } else if (res.curve.size() >= 2 * spec.trim + 4) {
    res.fit = fit_loglog(res.curve, spec.trim);
  } else if (res.curve.size() >= 4) {
    res.fit = fit_loglog(res.curve, 0, res.curve.size());
    res.note = "curve too short to trim; fitted on all samples";
  } else {
    res.note = "curve too short to fit";
  }
  return res;
}

// CSV: comment header with version, seed and config, then one row per sample.
inline void write_curve_csv(std::ostream& os, const ExampleResult& r, const nlohmann::json& config, std::uint64_t seed) {
  os << "# emod " << kVersion << "\n";
  os << "# seed=" << seed << "\n";
  os << "# config=" << config.dump() << "\n";
  os << "# id=" << r.curve.id << " params=" << to_json(r.curve.params).dump() << "\n";
  os << (r.curve.by_degree ? "n" : "t") << ",value\n" << std::setprecision(17);
  for (std::size_t k = 0; k < r.curve.size(); ++k) os << r.curve.scales[k] << "," << r.curve.values[k] << "\n";
}

inline nlohmann::json fit_record(const ExampleResult& r, const nlohmann::json& config, std::uint64_t seed) {
  nlohmann::json j = r.to_json();
  j["version"] = kVersion;
  j["seed"] = seed;
  j["config"] = config;
  return j;
}

}  // namespace emod
