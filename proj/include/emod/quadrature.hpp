#pragma once

#include "emod/core_math.hpp"
#include "emod/jacobi.hpp"

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

// Nodes are stored flat, dim coordinates per node. When circle_size > 0 the
// nodes come in consecutive runs of circle_size equispaced points on circles
// lying in the coordinate plane (circle_i, circle_j) (0-based); along a run the
// angle increases from e_i toward e_j by 2 pi / circle_size.
struct QuadratureRule {
  int dim = 0;
  std::vector<double> nodes;
  std::vector<double> weights;
  Domain domain;
  double mu = 0.5;  // ball / interval weight parameter
  int exact_degree = 0;
  int circle_size = 0;
  int circle_i = 0;
  int circle_j = 1;

  std::size_t size() const { return weights.size(); }
  std::span<const double> node(std::size_t k) const { return {nodes.data() + k * dim, static_cast<std::size_t>(dim)}; }
  double mass() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
  }
};

namespace detail {

// Gauss-Jacobi on [0,1] for (1-u)^a u^b.
inline GaussRule1D gauss_jacobi_unit(int m, double a, double b) {
  GaussRule1D g = gauss_jacobi(m, a, b);
  const double scale = std::pow(0.5, a + b + 1.0);
  for (std::size_t k = 0; k < g.x.size(); ++k) {
    g.x[k] = 0.5 * (g.x[k] + 1.0);
    g.w[k] *= scale;
  }
  return g;
}

inline int circle_points(int degree) { return degree + 1; }

// number of Gauss points in u = s^2 needed for exactness `degree` in x
inline int radial_points(int degree) { return (degree / 2) / 2 + 1; }

}  // namespace detail

// Rule on S^{d-1}. d = 1 gives the two points of S^0, d = 2 the circle.
// For d >= 3: x = (s cos phi, s sin phi, sqrt(1-s^2) y), y in S^{d-3},
// dsigma = s (1-s^2)^{(d-4)/2} ds dphi dsigma(y), Gauss-Jacobi in u = s^2.
inline QuadratureRule sphere_rule(int d, int exact_degree, double phase = 0.5) {
  if (d < 1) throw std::domain_error("sphere_rule: unsupported dimension " + std::to_string(d));
  if (exact_degree < 0) throw std::domain_error("sphere_rule: negative degree");
  QuadratureRule R;
  R.dim = d;
  R.domain = Domain::sphere(d);
  R.exact_degree = exact_degree;
  if (d == 1) {
    R.nodes = {1.0, -1.0};
    R.weights = {1.0, 1.0};
    return R;
  }
  const int N = detail::circle_points(exact_degree);
  R.circle_size = N;
  if (d == 2) {
    for (int b = 0; b < N; ++b) {
      double phi = 2.0 * pi * (b + phase) / N;
      R.nodes.push_back(std::cos(phi));
      R.nodes.push_back(std::sin(phi));
      R.weights.push_back(2.0 * pi / N);
    }
    return R;
  }
  QuadratureRule rest = sphere_rule(d - 2, exact_degree, phase);
  GaussRule1D g = detail::gauss_jacobi_unit(detail::radial_points(exact_degree), 0.5 * (d - 4), 0.0);
  for (std::size_t a = 0; a < g.x.size(); ++a) {
    const double s = std::sqrt(g.x[a]), c = std::sqrt(1.0 - g.x[a]);
    for (std::size_t q = 0; q < rest.size(); ++q) {
      auto y = rest.node(q);
      for (int b = 0; b < N; ++b) {
        double phi = 2.0 * pi * (b + phase) / N;
        R.nodes.push_back(s * std::cos(phi));
        R.nodes.push_back(s * std::sin(phi));
        for (double yk : y) R.nodes.push_back(c * yk);
        R.weights.push_back(0.5 * g.w[a] * rest.weights[q] * 2.0 * pi / N);
      }
    }
  }
  return R;
}

// Rule on B^d against W_mu(x) = (1-|x|^2)^{mu-1/2}.
// d = 1: Gauss-Jacobi. d = 2: polar with u = rho^2. d >= 3: x = (sqrt(1-|v|^2) z, v)
// with z in B^2 (weight W_mu) and v in B^{d-2} (weight W_{mu+1}).
namespace detail {
// mu > -1/2 is accepted here; W_mu is still integrable down to that point.
inline QuadratureRule ball_rule_impl(int d, double mu, int exact_degree, double phase) {
  if (d < 1) throw std::domain_error("ball_rule: unsupported dimension " + std::to_string(d));
  if (!(mu > -0.5)) throw std::domain_error("ball_rule: mu must exceed -1/2");
  if (exact_degree < 0) throw std::domain_error("ball_rule: negative degree");
  QuadratureRule R;
  R.dim = d;
  R.domain = d == 1 ? Domain::interval() : Domain::ball(d);
  R.mu = mu;
  R.exact_degree = exact_degree;
  if (d == 1) {
    GaussRule1D g = gauss_jacobi(exact_degree / 2 + 1, mu - 0.5, mu - 0.5);
    R.nodes = g.x;
    R.weights = g.w;
    return R;
  }
  const int N = detail::circle_points(exact_degree);
  R.circle_size = N;
  GaussRule1D g = detail::gauss_jacobi_unit(detail::radial_points(exact_degree), mu - 0.5, 0.0);
  if (d == 2) {
    for (std::size_t a = 0; a < g.x.size(); ++a) {
      const double rho = std::sqrt(g.x[a]);
      for (int b = 0; b < N; ++b) {
        double phi = 2.0 * pi * (b + phase) / N;
        R.nodes.push_back(rho * std::cos(phi));
        R.nodes.push_back(rho * std::sin(phi));
        R.weights.push_back(0.5 * g.w[a] * 2.0 * pi / N);
      }
    }
    return R;
  }
  QuadratureRule rest = ball_rule_impl(d - 2, mu + 1.0, exact_degree, phase);
  for (std::size_t q = 0; q < rest.size(); ++q) {
    auto v = rest.node(q);
    const double a2 = std::max(0.0, 1.0 - norm2(v)), amp = std::sqrt(a2);
    for (std::size_t a = 0; a < g.x.size(); ++a) {
      const double rho = amp * std::sqrt(g.x[a]);
      for (int b = 0; b < N; ++b) {
        double phi = 2.0 * pi * (b + phase) / N;
        R.nodes.push_back(rho * std::cos(phi));
        R.nodes.push_back(rho * std::sin(phi));
        for (double vk : v) R.nodes.push_back(vk);
        R.weights.push_back(rest.weights[q] * 0.5 * g.w[a] * 2.0 * pi / N);
      }
    }
  }
  return R;
}
}  // namespace detail

inline QuadratureRule ball_rule(int d, double mu, int exact_degree, double phase = 0.5) {
  if (mu < 0.0) throw std::domain_error("ball_rule: mu must be >= 0");
  return detail::ball_rule_impl(d, mu, exact_degree, phase);
}

inline QuadratureRule interval_rule(double mu, int exact_degree) { return ball_rule(1, mu, exact_degree); }

// Same rule with coordinates permuted so that its circles lie in the plane
// (i, j), 1-based. Sphere and ball measures are permutation invariant.
inline QuadratureRule rule_for_plane(const QuadratureRule& R, int i, int j) {
  if (R.circle_size == 0) throw std::domain_error("rule_for_plane: rule has no circle structure");
  detail::check_plane(i, j, R.dim);
  std::vector<int> perm(R.dim);  // new position of old coordinate k
  perm[0] = i - 1;
  perm[1] = j - 1;
  int next = 0;
  for (int k = 2; k < R.dim; ++k) {
    while (next == i - 1 || next == j - 1) ++next;
    perm[k] = next++;
  }
  QuadratureRule out = R;
  for (std::size_t q = 0; q < R.size(); ++q)
    for (int k = 0; k < R.dim; ++k) out.nodes[q * R.dim + perm[k]] = R.nodes[q * R.dim + k];
  out.circle_i = i - 1;
  out.circle_j = j - 1;
  return out;
}

inline double integrate(const QuadratureRule& R, const FunctionHandle& f) {
  double s = 0.0;
  for (std::size_t q = 0; q < R.size(); ++q) {
    double v = f(R.node(q));
    if (!std::isfinite(v)) {
      std::ostringstream os;
      os << "integrate: non-finite value at node " << q << " (";
      for (int k = 0; k < R.dim; ++k) os << (k ? ", " : "") << R.node(q)[k];
      os << ")";
      throw std::domain_error(os.str());
    }
    s += R.weights[q] * v;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Weights

struct WeightSpec {
  enum class Kind { unit, w_mu, h_alpha, doubling };
  Kind kind = Kind::unit;
  double mu = 0.5;
  std::vector<Point> directions;
  std::vector<double> exponents;
  std::shared_ptr<const WeightSpec> base;
  int n = 1;
  int cap_degree = 16;

  static WeightSpec unit() { return {}; }
  static WeightSpec w_mu(double mu) {
    if (mu < 0.0) throw std::domain_error("W_mu weight needs mu >= 0");
    WeightSpec w;
    w.kind = Kind::w_mu;
    w.mu = mu;
    return w;
  }
  static WeightSpec h_alpha(std::vector<Point> dirs, std::vector<double> alphas) {
    if (dirs.size() != alphas.size()) throw std::domain_error("h_alpha: directions/exponents size mismatch");
    for (std::size_t k = 0; k < dirs.size(); ++k) {
      if (!(alphas[k] > 0.0)) throw std::domain_error("h_alpha: exponents must be positive");
      if (std::abs(norm(dirs[k]) - 1.0) > 1e-12) throw std::domain_error("h_alpha: directions must be unit");
    }
    WeightSpec w;
    w.kind = Kind::h_alpha;
    w.directions = std::move(dirs);
    w.exponents = std::move(alphas);
    return w;
  }
  static WeightSpec doubling(const WeightSpec& base_weight, int n, int cap_degree = 16) {
    if (n < 1) throw std::domain_error("doubling weight needs n >= 1");
    WeightSpec w;
    w.kind = Kind::doubling;
    w.base = std::make_shared<WeightSpec>(base_weight);
    w.n = n;
    w.cap_degree = cap_degree;
    return w;
  }

  bool is_unit() const { return kind == Kind::unit; }
  // rotation invariant in every coordinate plane, so +theta and -theta give equal norms
  bool rotation_invariant() const { return kind == Kind::unit || kind == Kind::w_mu; }

  double operator()(std::span<const double> x) const;
};

double doubling_wn(const WeightSpec& w, int n, std::span<const double> x, int cap_rule_degree);

inline double WeightSpec::operator()(std::span<const double> x) const {
  switch (kind) {
    case Kind::unit: return 1.0;
    case Kind::w_mu: return std::pow(std::max(0.0, 1.0 - norm2(x)), mu - 0.5);
    case Kind::h_alpha: {
      double v = 1.0;
      for (std::size_t k = 0; k < directions.size(); ++k) v *= std::pow(std::abs(dot(x, directions[k])), exponents[k]);
      return v;
    }
    case Kind::doubling: return doubling_wn(*base, n, x, cap_degree);
  }
  return 1.0;
}

namespace detail {

// Orthonormal basis of the tangent space of the unit vector x.
inline std::vector<Point> tangent_basis(std::span<const double> x) {
  const int d = static_cast<int>(x.size());
  std::vector<Point> basis;
  std::vector<Point> cand;
  for (int k = 0; k < d; ++k) {
    Point e(d, 0.0);
    e[k] = 1.0;
    cand.push_back(e);
  }
  // start with coordinate vectors least aligned with x
  std::sort(cand.begin(), cand.end(), [&](const Point& a, const Point& b) {
    return std::abs(dot(a, x)) < std::abs(dot(b, x));
  });
  for (auto& e : cand) {
    if (static_cast<int>(basis.size()) == d - 1) break;
    double c = dot(e, x);
    for (int k = 0; k < d; ++k) e[k] -= c * x[k];
    for (const auto& b : basis) {
      double cb = dot(e, b);
      for (int k = 0; k < d; ++k) e[k] -= cb * b[k];
    }
    double ne = norm(e);
    if (ne < 1e-8) continue;
    for (double& v : e) v /= ne;
    basis.push_back(e);
  }
  return basis;
}

}  // namespace detail

// n^{d-1} times the integral of w over the cap c(x, 1/n):
// y = cos(rho) x + sin(rho) xi, xi in the tangent sphere, dsigma = sin^{d-2} rho drho dxi.
inline double doubling_wn(const WeightSpec& w, int n, std::span<const double> x, int cap_rule_degree) {
  if (n < 1) throw std::domain_error("doubling_wn: n must be >= 1");
  const int d = static_cast<int>(x.size());
  if (d < 2) throw std::domain_error("doubling_wn: sphere dimension too small");
  const double delta = 1.0 / n;
  GaussRule1D g = gauss_legendre(std::max(4, cap_rule_degree / 2 + 2));
  QuadratureRule tang = sphere_rule(d - 1, std::max(2, cap_rule_degree));
  auto basis = detail::tangent_basis(x);
  Point y(d);
  double s = 0.0;
  for (std::size_t a = 0; a < g.x.size(); ++a) {
    double rho = 0.5 * delta * (g.x[a] + 1.0);
    double wr = 0.5 * delta * g.w[a] * std::pow(std::sin(rho), d - 2);
    double cr = std::cos(rho), sr = std::sin(rho);
    for (std::size_t q = 0; q < tang.size(); ++q) {
      auto xi = tang.node(q);
      for (int k = 0; k < d; ++k) {
        double t = 0.0;
        for (int m = 0; m < d - 1; ++m) t += xi[m] * basis[m][k];
        y[k] = cr * x[k] + sr * t;
      }
      s += wr * tang.weights[q] * w(y);
    }
  }
  return std::pow(static_cast<double>(n), d - 1) * s;
}

// ---------------------------------------------------------------------------
// Norms

namespace detail {

inline void project_to_domain(std::span<double> y, const Domain& dom) {
  double r = norm(y);
  if (dom.kind == DomainKind::sphere) {
    for (double& v : y) v /= r;
  } else if (r > 1.0) {
    for (double& v : y) v /= r;
  }
}

// Pattern search with step halving around a starting node.
inline double refine_max(const FunctionHandle& f, const Domain& dom, Point x, double best, double h0) {
  const int d = static_cast<int>(x.size());
  Point y(d);
  double h = h0;
  for (int iter = 0; iter < 200 && h > 1e-10; ++iter) {
    bool improved = false;
    std::vector<Point> dirs;
    if (dom.kind == DomainKind::sphere) {
      dirs = tangent_basis(x);
    } else {
      for (int k = 0; k < d; ++k) {
        Point e(d, 0.0);
        e[k] = 1.0;
        dirs.push_back(e);
      }
    }
    for (const auto& e : dirs) {
      for (double sgn : {1.0, -1.0}) {
        if (dom.kind == DomainKind::sphere) {
          for (int k = 0; k < d; ++k) y[k] = std::cos(h) * x[k] + sgn * std::sin(h) * e[k];
        } else {
          for (int k = 0; k < d; ++k) y[k] = x[k] + sgn * h * e[k];
        }
        project_to_domain(y, dom);
        double v = std::abs(f(y));
        if (std::isfinite(v) && v > best) {
          best = v;
          x = y;
          improved = true;
        }
      }
    }
    if (!improved) h *= 0.5;
  }
  return best;
}

}  // namespace detail

inline double lp_norm(const QuadratureRule& R, const FunctionHandle& f, double p,
                      const WeightSpec& weight = WeightSpec::unit()) {
  if (!(p >= 1.0)) throw std::domain_error("lp_norm: p must be >= 1");
  if (std::isinf(p)) {
    double best = -1.0;
    std::size_t arg = 0;
    for (std::size_t q = 0; q < R.size(); ++q) {
      double v = std::abs(f(R.node(q)));
      if (!std::isfinite(v)) throw std::domain_error("lp_norm: non-finite value at node " + std::to_string(q));
      if (v > best) {
        best = v;
        arg = q;
      }
    }
    if (R.size() == 0) return 0.0;
    Point x(R.node(arg).begin(), R.node(arg).end());
    const double h0 = (R.domain.kind == DomainKind::sphere ? pi : 1.0) / (R.exact_degree + 2);
    return detail::refine_max(f, R.domain, x, best, h0);
  }
  double s = 0.0;
  for (std::size_t q = 0; q < R.size(); ++q) {
    auto x = R.node(q);
    double v = f(x);
    if (!std::isfinite(v)) throw std::domain_error("lp_norm: non-finite value at node " + std::to_string(q));
    double w = weight.is_unit() ? 1.0 : weight(x);
    s += R.weights[q] * w * std::pow(std::abs(v), p);
  }
  return std::pow(s, 1.0 / p);
}

// ---------------------------------------------------------------------------
// Separated sets

struct SeparatedSet {
  std::vector<Point> centers;
  double delta = 0.0;
};

namespace detail {

inline double radical_inverse(unsigned long k, unsigned base) {
  double inv = 1.0 / base, f = inv, r = 0.0;
  while (k > 0) {
    r += f * (k % base);
    k /= base;
    f *= inv;
  }
  return r;
}

inline constexpr unsigned kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71};

// Quasi-uniform stream on S^{d-1}: Fibonacci lattice for d = 3, Halton points
// pushed through Box-Muller otherwise.
inline std::vector<Point> sphere_stream(int d, std::size_t count, unsigned long offset = 0) {
  std::vector<Point> pts;
  pts.reserve(count);
  if (d == 3 && offset == 0) {
    const double golden = pi * (3.0 - std::sqrt(5.0));
    for (std::size_t k = 0; k < count; ++k) {
      double z = 1.0 - (2.0 * k + 1.0) / count;
      double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      double phi = golden * k;
      pts.push_back({r * std::cos(phi), r * std::sin(phi), z});
    }
    return pts;
  }
  if (2 * ((d + 1) / 2) > static_cast<int>(std::size(kPrimes)))
    throw std::domain_error("sphere_stream: dimension too large");
  for (std::size_t k = 0; k < count; ++k) {
    Point x(d);
    unsigned long idx = k + 1 + offset;
    for (int c = 0; c < d; c += 2) {
      double u1 = radical_inverse(idx, kPrimes[c]);
      double u2 = radical_inverse(idx, kPrimes[c + 1]);
      u1 = std::max(u1, 1e-300);
      double rad = std::sqrt(-2.0 * std::log(u1));
      x[c] = rad * std::cos(2.0 * pi * u2);
      if (c + 1 < d) x[c + 1] = rad * std::sin(2.0 * pi * u2);
    }
    double nx = norm(x);
    if (nx == 0.0) continue;
    for (double& v : x) v /= nx;
    pts.push_back(std::move(x));
  }
  return pts;
}

}  // namespace detail

// Greedy maximal delta-separated set on S^{d-1}.
inline SeparatedSet separated_set(int d, double delta, std::size_t stream_size = 0) {
  if (d < 2) throw std::domain_error("separated_set: d must be >= 2");
  if (!(delta > 0.0)) throw std::domain_error("separated_set: delta must be positive");
  if (stream_size == 0) {
    double per = std::pow(5.0 / std::min(delta, 1.0), d - 1);
    stream_size = static_cast<std::size_t>(std::clamp(4.0 * per, 64.0, 400000.0));
  }
  const double cd = std::cos(delta);
  SeparatedSet S;
  S.delta = delta;
  auto try_add = [&](const Point& x) {
    for (const auto& c : S.centers)
      if (dot(x, c) >= cd - 1e-14) return;
    S.centers.push_back(x);
  };
  for (const auto& x : detail::sphere_stream(d, stream_size)) try_add(x);
  // maximality pass on an independent stream
  for (const auto& x : detail::sphere_stream(d, stream_size / 4 + 16, 7919)) try_add(x);
  return S;
}

// ---------------------------------------------------------------------------
// CSV serialization: header line "w,x1,...,xd", then one node per line.

inline void write_rule_csv(std::ostream& os, const QuadratureRule& R) {
  os << "# domain=" << to_string(R.domain) << " mu=" << R.mu << " exact_degree=" << R.exact_degree << "\n";
  os << "w";
  for (int k = 1; k <= R.dim; ++k) os << ",x" << k;
  os << "\n" << std::setprecision(17);
  for (std::size_t q = 0; q < R.size(); ++q) {
    os << R.weights[q];
    for (double v : R.node(q)) os << "," << v;
    os << "\n";
  }
}

}  // namespace emod
