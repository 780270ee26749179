#include "emod/emod.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cctype>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>

namespace {

using nlohmann::json;

enum Exit { kOk = 0, kValidation = 1, kAssertion = 2, kNumerical = 3 };

struct RunConfig {
  std::string command;
  std::string example;
  std::string poly;
  std::string domain = "sphere";
  int d = 3;
  double p = 2.0;
  double mu = 0.5;
  double alpha = 0.25;
  int r = 2;
  double y0 = 1.0;
  bool y0_follows_t = false;
  double tmin = std::pow(2.0, -9);
  double tmax = std::pow(2.0, -3);
  int tsteps = 13;
  int nmin = 8;
  int nmax = 64;
  int quad_degree = 0;
  std::uint64_t seed = 0;
  double tol_scale = 1.0;
  std::string out;
  std::string config;

  // everything that determines the output; paths are left out
  json to_json() const {
    return {{"command", command}, {"example", example}, {"poly", poly},     {"domain", domain},
            {"d", d},             {"p", p},             {"mu", mu},         {"alpha", alpha},
            {"r", r},             {"y0", y0},           {"y0_follows_t", y0_follows_t},
            {"tmin", tmin},       {"tmax", tmax},       {"tsteps", tsteps}, {"nmin", nmin},
            {"nmax", nmax},       {"quad_degree", quad_degree},
            {"seed", seed},       {"tol_scale", tol_scale}};
  }
};

// Polynomial from text such as "x1*x2 - 0.5*x3^2 + 1".
emod::Polynomial parse_polynomial(const std::string& text, int d) {
  emod::Polynomial P(d);
  std::size_t pos = 0;
  auto skip = [&] {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  };
  auto fail = [&](const std::string& why) {
    throw emod::ValidationError("--poly: " + why + " at position " + std::to_string(pos) + " in '" + text + "'");
  };
  auto number = [&]() {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(text.substr(pos), &used);
    } catch (const std::exception&) {
      fail("expected a number");
    }
    pos += used;
    return v;
  };
  auto integer = [&]() {
    const std::size_t start = pos;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
    if (pos == start) fail("expected an integer");
    return std::stoi(text.substr(start, pos - start));
  };
  skip();
  if (pos == text.size()) fail("empty polynomial");
  bool first = true;
  while (pos < text.size()) {
    double sign = 1.0;
    skip();
    if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) {
      sign = text[pos] == '-' ? -1.0 : 1.0;
      ++pos;
    } else if (!first) {
      fail("expected '+' or '-'");
    }
    first = false;
    double coef = sign;
    emod::Polynomial::Exponents e(d, 0);
    for (bool more = true; more;) {
      skip();
      if (pos < text.size() && text[pos] == 'x') {
        ++pos;
        const int k = integer();
        if (k < 1 || k > d) fail("coordinate x" + std::to_string(k) + " outside 1..d");
        int power = 1;
        skip();
        if (pos < text.size() && text[pos] == '^') {
          ++pos;
          skip();
          power = integer();
        }
        e[k - 1] += power;
      } else {
        coef *= number();
      }
      skip();
      more = pos < text.size() && text[pos] == '*';
      if (more) ++pos;
    }
    P.add_term(e, coef);
  }
  return P;
}

emod::Domain poly_domain(const RunConfig& c) {
  if (c.domain == "sphere") {
    if (c.d < 3) throw emod::ValidationError("--poly on the sphere needs d >= 3");
    return emod::Domain::sphere(c.d);
  }
  if (c.domain == "ball") {
    if (c.d < 2) throw emod::ValidationError("--poly on the ball needs d >= 2");
    return emod::Domain::ball(c.d);
  }
  if (c.domain == "interval") return emod::Domain::interval();
  throw emod::ValidationError("--domain must be sphere, ball or interval");
}

void check_common(const RunConfig& c) {
  if (!(c.p >= 1.0)) throw emod::ValidationError("p must be >= 1 (got " + std::to_string(c.p) + ")");
  if (c.r < 1) throw emod::ValidationError("r must be >= 1");
  const double m = 2.0 * c.mu + 1.0;
  if (!(c.mu >= 0.0) || std::abs(m - std::round(m)) > 1e-12)
    throw emod::ValidationError("mu must be (m-1)/2 with m a positive integer");
  if (c.example.empty() == c.poly.empty()) throw emod::ValidationError("give exactly one of --example and --poly");
}

emod::ExampleSpec example_spec(const RunConfig& c) {
  emod::ExampleSpec s;
  s.id = c.example;
  s.params.d = c.d;
  s.params.p = c.p;
  s.params.mu = c.mu;
  s.params.alpha = c.alpha;
  s.params.r = c.r;
  s.params.y0 = c.y0;
  s.params.y0_follows_t = c.y0_follows_t;
  s.tmin = c.tmin;
  s.tmax = c.tmax;
  s.tsteps = c.tsteps;
  s.nmin = c.nmin;
  s.nmax = c.nmax;
  s.quad_degree = c.quad_degree;
  return s;
}

void finish_fit(emod::ExampleResult& res, std::size_t trim) {
  res.curve.validate();
  bool vanished = true;
  for (double v : res.curve.values) vanished = vanished && v == 0.0;
  if (vanished) {
    res.note = "all values vanish: exact reproduction";
  } else if (res.curve.size() >= 2 * trim + 4) {
    res.fit = emod::fit_loglog(res.curve, trim);
  } else if (res.curve.size() >= 4) {
    res.fit = emod::fit_loglog(res.curve, 0, res.curve.size());
    res.note = "curve too short to trim; fitted on all samples";
  } else {
    res.note = "curve too short to fit";
  }
}

emod::ModulusVariant variant_of(const emod::Domain& dom) {
  if (dom.kind == emod::DomainKind::sphere) return emod::ModulusVariant::sphere;
  if (dom.kind == emod::DomainKind::interval) return emod::ModulusVariant::interval;
  return emod::ModulusVariant::ball;
}

emod::QuadratureRule rule_on(const emod::Domain& dom, double mu, int degree) {
  if (dom.kind == emod::DomainKind::sphere) return emod::sphere_rule(dom.d, degree);
  return emod::ball_rule(dom.d, mu, degree);
}

emod::ExampleResult poly_modulus(const RunConfig& c) {
  const auto dom = poly_domain(c);
  const auto P = parse_polynomial(c.poly, dom.d);
  emod::ExampleSpec grid = example_spec(c);
  if (!(c.tmin > 0.0 && c.tmax >= c.tmin && c.tmax <= emod::pi))
    throw emod::ValidationError("t grid must satisfy 0 < tmin <= tmax <= pi");
  if (c.tsteps < 1) throw emod::ValidationError("tsteps must be >= 1");
  emod::ModulusRequest req;
  req.f = P.as_function(dom);
  req.r = c.r;
  req.p = c.p;
  req.mu = c.mu;
  req.variant = variant_of(dom);
  const int deg = c.quad_degree > 0 ? c.quad_degree : std::max(2, 2 * P.degree() + 8);
  const auto R = rule_on(dom, c.mu, deg);
  emod::ModulusEngine eng(req, {}, &R);
  emod::ExampleResult res;
  res.curve.id = "poly";
  res.curve.params.d = dom.d;
  res.curve.params.p = c.p;
  res.curve.params.mu = c.mu;
  res.curve.params.r = c.r;
  res.curve.scales = grid.t_grid();
  res.curve.values = eng.curve(res.curve.scales);
  res.expected = std::numeric_limits<double>::quiet_NaN();
  res.regime = "polynomial";
  res.method = "fixed rule of degree " + std::to_string(deg);
  finish_fit(res, 2);
  return res;
}

// E_n of a polynomial plus the reproduction error of V_n at n = deg P
emod::ExampleResult poly_approx(const RunConfig& c, json& extra) {
  const auto dom = poly_domain(c);
  const auto P = parse_polynomial(c.poly, dom.d);
  if (c.nmin < 1 || c.nmax < c.nmin) throw emod::ValidationError("n grid must satisfy 1 <= nmin <= nmax");
  if (dom.kind == emod::DomainKind::interval && c.mu == 0.0)
    throw emod::ValidationError("interval approximation needs mu > 0");
  emod::ExampleSpec grid = example_spec(c);
  const auto f = P.as_function(dom);
  const auto variant = dom.kind == emod::DomainKind::sphere ? emod::ApproxVariant::sphere : emod::ApproxVariant::ball;
  const int pd = P.degree();
  const auto ns = grid.n_grid();
  const int deg = c.quad_degree > 0 ? c.quad_degree : 2 * std::max(pd, ns.back()) + 4;
  const auto R = rule_on(dom, c.mu, deg);
  emod::ExampleResult res;
  res.curve.id = "poly";
  res.curve.by_degree = true;
  res.curve.params.d = dom.d;
  res.curve.params.p = c.p;
  res.curve.params.mu = c.mu;
  for (int n : ns) {
    res.curve.scales.push_back(n);
    res.curve.values.push_back(emod::best_approx(f, n, c.p, R, variant, c.mu));
  }
  res.expected = std::numeric_limits<double>::quiet_NaN();
  res.regime = "polynomial";
  res.method = "projection on a fixed rule of degree " + std::to_string(deg);
  finish_fit(res, 2);

  const int n = std::max(pd, 1);
  const auto Rv = rule_on(dom, c.mu, pd + 2 * n);
  const auto V = variant == emod::ApproxVariant::sphere ? emod::vn_operator(f, n, Rv) : emod::vn_mu_operator(f, n, c.mu, Rv);
  const auto probe = rule_on(dom, c.mu, pd + 3);
  double err = 0.0;
  for (std::size_t q = 0; q < probe.size(); ++q) err = std::max(err, std::abs(V(probe.node(q)) - f(probe.node(q))));
  extra["reproduction"] = {{"n", n}, {"max_error", err}};
  return res;
}

void emit(const RunConfig& c, const emod::ExampleResult& res, const json& extra) {
  const json cfg = c.to_json();
  json rec = emod::fit_record(res, cfg, c.seed);
  for (const auto& [k, v] : extra.items()) rec[k] = v;
  if (c.out.empty()) {
    emod::write_curve_csv(std::cout, res, cfg, c.seed);
    std::cout << rec.dump(2) << "\n";
    return;
  }
  std::ofstream csv(c.out + ".csv"), js(c.out + ".json");
  if (!csv || !js) throw std::runtime_error("cannot write " + c.out + ".csv / .json");
  emod::write_curve_csv(csv, res, cfg, c.seed);
  js << rec.dump(2) << "\n";
  std::cerr << "wrote " << c.out << ".csv and " << c.out << ".json\n";
}

int cmd_modulus(const RunConfig& c) {
  check_common(c);
  emod::ExampleResult res;
  if (!c.poly.empty()) {
    res = poly_modulus(c);
  } else {
    auto s = example_spec(c);
    if (s.quantity() != emod::Quantity::modulus)
      throw emod::ValidationError(c.example + " is a best-approximation example; use `approx`");
    res = emod::run_example(s);
  }
  emit(c, res, json::object());
  return kOk;
}

int cmd_approx(const RunConfig& c) {
  check_common(c);
  emod::ExampleResult res;
  json extra = json::object();
  if (!c.poly.empty()) {
    res = poly_approx(c, extra);
  } else {
    auto s = example_spec(c);
    if (s.quantity() != emod::Quantity::best_approx)
      throw emod::ValidationError(c.example + " is a modulus example; use `modulus`");
    res = emod::run_example(s);
  }
  emit(c, res, extra);
  return kOk;
}

int cmd_verify(const RunConfig& c) {
  if (!(c.tol_scale >= 0.0)) throw emod::ValidationError("--tol-scale must be >= 0");
  std::mt19937_64 rng(c.seed);
  std::vector<emod::Check> checks;
  checks.push_back(emod::check_gegenbauer_normalization(64));
  checks.push_back(emod::check_reproduction(3, 6, 18, 10, rng));
  checks.push_back(emod::check_commutation(3, 6, 5, 10, rng));
  checks.push_back(emod::check_eigen_identity({3, 4}, 5, 6, rng));
  checks.push_back(emod::check_laplace_beltrami(6, rng));
  checks.push_back(emod::check_dmu_decomposition({2, 3}, {0.5, 1.0}, 6, 6, rng));
  checks.push_back(emod::check_simplex_transfer({2, 3}, {0.5, 1.0}, 6, 6, rng));
  checks.push_back(emod::check_bernstein(2, 1, 0.5, {4, 8, 16}, 6, rng));
  checks.push_back(emod::check_mz(3, 8, 1.0, 1, rng));
  {
    emod::ExampleSpec s;
    s.id = "L1";
    s.params.d = 1;
    const auto f = emod::example_function(s);
    emod::KFunctionalEngine K(f, emod::ModulusVariant::interval, s.params.mu, 32);
    emod::ModulusRequest req;
    req.f = f;
    req.variant = emod::ModulusVariant::interval;
    req.mu = s.params.mu;
    emod::ModulusEngine M(req);
    const auto rows = emod::jackson_rows(K, M, {8, 16, 32});
    double worst = 0.0;
    json detail = json::array();
    for (const auto& w : rows) {
      worst = std::max({worst, w.jackson, w.inverse, w.kfunc, 1.0 / w.kfunc});
      detail.push_back(w.to_json());
    }
    checks.push_back(emod::make_check("jackson_inverse_kfunctional_L1", worst, 50.0, {{"rows", detail}}));
  }
  bool all = true;
  json list = json::array();
  for (auto& ch : checks) {
    ch.bound *= c.tol_scale;
    ch.pass = std::isfinite(ch.value) && ch.value <= ch.bound && (ch.name != "mz_bracketing" || ch.detail["brackets"].get<bool>());
    all = all && ch.pass;
    list.push_back(ch.to_json());
  }
  const json report = {{"version", emod::kVersion}, {"seed", c.seed}, {"config", c.to_json()}, {"checks", list}, {"pass", all}};
  if (c.out.empty()) {
    std::cout << report.dump(2) << "\n";
  } else {
    std::ofstream os(c.out + ".json");
    if (!os) throw std::runtime_error("cannot write " + c.out + ".json");
    os << report.dump(2) << "\n";
  }
  for (const auto& ch : checks)
    if (!ch.pass) std::cerr << "verify: " << ch.name << " failed: " << ch.value << " > " << ch.bound << "\n";
  return all ? kOk : kAssertion;
}

int cmd_catalog() {
  for (const auto& e : emod::catalog())
    std::cout << e.id << "\t" << e.quantity << "\t" << e.function << "\texponent " << e.exponent << "\tstrip: " << e.strip
              << "\n";
  return kOk;
}

// Fills options that were not given on the command line from a JSON config file.
void merge_config(CLI::App& sub, RunConfig& c) {
  if (c.config.empty()) return;
  std::ifstream is(c.config);
  if (!is) throw emod::ValidationError("cannot read config file '" + c.config + "'");
  json j;
  try {
    is >> j;
  } catch (const json::parse_error& e) {
    throw emod::ValidationError("config file '" + c.config + "' is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw emod::ValidationError("config file must hold a JSON object");
  auto take = [&](const char* key, const char* flag, auto& field) {
    const CLI::Option* opt = sub.get_option_no_throw(flag);
    if (!j.contains(key) || (opt && opt->count() > 0)) return;
    try {
      j.at(key).get_to(field);
    } catch (const json::exception&) {
      throw emod::ValidationError(std::string("config key '") + key + "' has the wrong type");
    }
  };
  take("example", "--example", c.example);
  take("poly", "--poly", c.poly);
  take("domain", "--domain", c.domain);
  take("d", "--d", c.d);
  take("p", "--p", c.p);
  take("mu", "--mu", c.mu);
  take("alpha", "--alpha", c.alpha);
  take("r", "--r", c.r);
  take("y0", "--y0", c.y0);
  take("y0_follows_t", "--y0-follows-t", c.y0_follows_t);
  take("tmin", "--tmin", c.tmin);
  take("tmax", "--tmax", c.tmax);
  take("tsteps", "--tsteps", c.tsteps);
  take("nmin", "--nmin", c.nmin);
  take("nmax", "--nmax", c.nmax);
  take("quad_degree", "--quad-degree", c.quad_degree);
  take("seed", "--seed", c.seed);
  take("tol_scale", "--tol-scale", c.tol_scale);
}

void add_common(CLI::App* s, RunConfig& c) {
  s->add_option("--example", c.example, "catalog id (see `emod catalog`)");
  s->add_option("--poly", c.poly, "polynomial input such as \"x1*x2 - 0.5*x3^2\"");
  s->add_option("--domain", c.domain, "domain of --poly: sphere, ball or interval");
  s->add_option("--d", c.d, "dimension d");
  s->add_option("--p", c.p, "exponent p");
  s->add_option("--mu", c.mu, "weight parameter mu = (m-1)/2");
  s->add_option("--alpha", c.alpha, "example exponent alpha");
  s->add_option("--r", c.r, "order r");
  s->add_option("--y0", c.y0, "S4/E4: y_0 = y0 e_1");
  s->add_flag("--y0-follows-t", c.y0_follows_t, "S4/E4: y_0 = (1 - t) e_1");
  s->add_option("--tmin", c.tmin, "smallest t");
  s->add_option("--tmax", c.tmax, "largest t");
  s->add_option("--tsteps", c.tsteps, "number of t samples");
  s->add_option("--nmin", c.nmin, "smallest n");
  s->add_option("--nmax", c.nmax, "largest n");
  s->add_option("--quad-degree", c.quad_degree, "fixed quadrature degree (0: adaptive)");
  s->add_option("--seed", c.seed, "random seed");
  s->add_option("--out", c.out, "output prefix (writes PREFIX.csv and PREFIX.json)");
  s->add_option("--config", c.config, "JSON config file; flags override its entries");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Moduli of smoothness, best approximation and their rates on spheres, balls and intervals"};
  app.set_version_flag("--version", emod::kVersion);
  app.require_subcommand(1);
  RunConfig cfg;
  auto* mod = app.add_subcommand("modulus", "rate curve of omega_r for a catalog example or polynomial");
  auto* apx = app.add_subcommand("approx", "E_n curve for a catalog example or polynomial");
  auto* ver = app.add_subcommand("verify", "invariant suites with a JSON report");
  auto* cat = app.add_subcommand("catalog", "list example ids and validity strips");
  add_common(mod, cfg);
  add_common(apx, cfg);
  ver->add_option("--seed", cfg.seed, "random seed");
  ver->add_option("--tol-scale", cfg.tol_scale, "multiplies every tolerance");
  ver->add_option("--out", cfg.out, "output prefix (writes PREFIX.json)");
  ver->add_option("--config", cfg.config, "JSON config file; flags override its entries");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }
  try {
    CLI::App* sub = app.get_subcommands().front();
    cfg.command = sub->get_name();
    merge_config(*sub, cfg);
    if (sub == mod) return cmd_modulus(cfg);
    if (sub == apx) return cmd_approx(cfg);
    if (sub == ver) return cmd_verify(cfg);
    if (sub == cat) return cmd_catalog();
  } catch (const emod::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  }
  return kOk;
}
