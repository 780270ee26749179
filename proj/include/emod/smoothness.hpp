#pragma once

#include "emod/core_math.hpp"
#include "emod/fibered.hpp"
#include "emod/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace emod {

// ---------------------------------------------------------------------------
// Difference operators. Every r-th difference is sum_k (-1)^k binom(r,k) f(...),
// which is (-1)^r times (I - T)^r f; norms do not see the sign.

enum class DiffKind { euler, central_phi, forward, backward };

struct DifferenceSpec {
  DiffKind kind = DiffKind::euler;
  int i = 1;  // plane (i, j) for euler, axis i otherwise; 1-based
  int j = 2;
  int r = 2;
  double step = 0.1;

  void validate(int d) const {
    if (r < 1) throw std::domain_error("difference order r must be >= 1");
    if (kind == DiffKind::euler) {
      detail::check_plane(i, j, d);
    } else if (i < 1 || i > d) {
      throw std::out_of_range("difference axis out of range");
    }
  }
};

namespace detail {
inline double diff_coef(int r, int k) { return ((k % 2) ? -1.0 : 1.0) * binomial(r, k); }
}  // namespace detail

inline double euler_difference(const FunctionHandle& f, int i, int j, double theta, int r,
                               std::span<const double> x) {
  const int d = static_cast<int>(x.size());
  detail::check_plane(i, j, d);
  Point y(x.begin(), x.end());
  double acc = 0.0;
  for (int k = 0; k <= r; ++k) {
    std::copy(x.begin(), x.end(), y.begin());
    rotate_plane(y, i - 1, j - 1, std::cos(k * theta), std::sin(k * theta));
    acc += detail::diff_coef(r, k) * f(y);
  }
  return acc;
}

// sum_k c_k f(x + (r/2 - k) h phi(x) e_i), phi(x) = sqrt(1 - |x|^2); zero when an
// end node leaves the ball.
inline double central_difference_phi(const FunctionHandle& f, int i, double h, int r, std::span<const double> x) {
  const int d = static_cast<int>(x.size());
  if (i < 1 || i > d) throw std::out_of_range("central_difference_phi: axis out of range");
  const double n2 = norm2(x);
  const double step = h * std::sqrt(std::max(0.0, 1.0 - n2));
  const double c = 0.5 * r * step, xi = x[i - 1];
  if (n2 + 2.0 * c * std::abs(xi) + c * c > 1.0 + 1e-15) return 0.0;
  Point y(x.begin(), x.end());
  double acc = 0.0;
  for (int k = 0; k <= r; ++k) {
    y[i - 1] = xi + (0.5 * r - k) * step;
    acc += detail::diff_coef(r, k) * f(y);
  }
  return acc;
}

// sum_k c_k f(x + direction k h e_i); zero when the stencil leaves the ball.
inline double forward_backward_difference(const FunctionHandle& f, int i, double h, int r,
                                          std::span<const double> x, int direction) {
  const int d = static_cast<int>(x.size());
  if (i < 1 || i > d) throw std::out_of_range("forward_backward_difference: axis out of range");
  if (direction != 1 && direction != -1) throw std::domain_error("direction must be +1 or -1");
  const double n2 = norm2(x), xi = x[i - 1], e = direction * r * h;
  if (n2 - xi * xi + (xi + e) * (xi + e) > 1.0 + 1e-15) return 0.0;
  Point y(x.begin(), x.end());
  double acc = 0.0;
  for (int k = 0; k <= r; ++k) {
    y[i - 1] = xi + direction * k * h;
    acc += detail::diff_coef(r, k) * f(y);
  }
  return acc;
}

inline double apply_difference(const DifferenceSpec& s, const FunctionHandle& f, std::span<const double> x) {
  s.validate(static_cast<int>(x.size()));
  switch (s.kind) {
    case DiffKind::euler: return euler_difference(f, s.i, s.j, s.step, s.r, x);
    case DiffKind::central_phi: return central_difference_phi(f, s.i, s.step, s.r, x);
    case DiffKind::forward: return forward_backward_difference(f, s.i, s.step, s.r, x, 1);
    case DiffKind::backward: return forward_backward_difference(f, s.i, s.step, s.r, x, -1);
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Spectral differentiation on circles

// Values g_k = g(2 pi k / N) of a trigonometric polynomial of degree < N/2;
// returns (d/dphi)^r g at the same points.
inline std::vector<double> circle_derivative(std::span<const double> g, int r) {
  const int N = static_cast<int>(g.size());
  const int M = (N - 1) / 2;
  std::vector<double> a(M + 1, 0.0), b(M + 1, 0.0);
  for (int m = 0; m <= M; ++m) {
    double sa = 0.0, sb = 0.0;
    for (int k = 0; k < N; ++k) {
      const double ph = 2.0 * pi * m * k / N;
      sa += g[k] * std::cos(ph);
      sb += g[k] * std::sin(ph);
    }
    a[m] = 2.0 * sa / N;
    b[m] = 2.0 * sb / N;
  }
  // d^r/dphi^r of (a cos + b sin)(m phi) = m^r (a cos + b sin)(m phi + r pi/2)
  std::vector<double> out(N, 0.0);
  if (r == 0) {
    std::copy(g.begin(), g.end(), out.begin());
    return out;
  }
  for (int k = 0; k < N; ++k) {
    double s = 0.0;
    for (int m = 1; m <= M; ++m) {
      const double ph = 2.0 * pi * m * k / N + 0.5 * r * pi;
      s += std::pow(static_cast<double>(m), r) * (a[m] * std::cos(ph) + b[m] * std::sin(ph));
    }
    out[k] = s;
  }
  return out;
}

// D_{i,j}^r f(x) = (-1)^r (d/dt)^r f(Q_{i,j,t} x) at t = 0, by trigonometric
// interpolation on 2 deg + 1 points (129 when the degree is unknown).
inline double dij_derivative(const FunctionHandle& f, int i, int j, int r, std::span<const double> x,
                             std::optional<int> degree = std::nullopt) {
  const int d = static_cast<int>(x.size());
  detail::check_plane(i, j, d);
  if (r < 0) throw std::domain_error("dij_derivative: negative order");
  std::optional<int> deg = degree ? degree : f.degree_hint;
  const int N = deg ? 2 * *deg + 1 : 129;
  std::vector<double> g(N);
  Point y(x.begin(), x.end());
  for (int k = 0; k < N; ++k) {
    std::copy(x.begin(), x.end(), y.begin());
    const double t = 2.0 * pi * k / N;
    rotate_plane(y, i - 1, j - 1, std::cos(t), std::sin(t));
    g[k] = f(y);
  }
  const int M = (N - 1) / 2;
  double s = 0.0;
  for (int m = 1; m <= M; ++m) {
    double am = 0.0, bm = 0.0;
    for (int k = 0; k < N; ++k) {
      const double ph = 2.0 * pi * m * k / N;
      am += g[k] * std::cos(ph);
      bm += g[k] * std::sin(ph);
    }
    am *= 2.0 / N;
    bm *= 2.0 / N;
    s += std::pow(static_cast<double>(m), r) * (am * std::cos(0.5 * r * pi) + bm * std::sin(0.5 * r * pi));
  }
  return (r % 2 ? -1.0 : 1.0) * s;
}

// ---------------------------------------------------------------------------
// Regions near the boundary of the ball, in the variable x_i / sqrt(1 - |x^_i|^2).

struct RegionSpec {
  enum class Which { I, J_plus, J_minus };
  Which which = Which::I;
  int i = 1;
  double t = 0.1;

  // [lo, hi]; empty when lo > hi
  std::pair<double, double> bounds() const {
    switch (which) {
      case Which::I: return {-1.0 + 2.0 * t * t, 1.0 - 2.0 * t * t};
      case Which::J_plus: return {std::max(-1.0, 1.0 - 12.0 * t * t), 1.0};
      case Which::J_minus: return {-1.0, std::min(1.0, -1.0 + 12.0 * t * t)};
    }
    return {0.0, 0.0};
  }

  bool contains(std::span<const double> x) const {
    const int d = static_cast<int>(x.size());
    if (i < 1 || i > d) throw std::out_of_range("RegionSpec: axis out of range");
    const double xi = x[i - 1];
    const double rest = 1.0 - (norm2(x) - xi * xi);
    if (rest <= 0.0) return false;
    const double u = xi / std::sqrt(rest);
    auto [lo, hi] = bounds();
    return u >= lo && u <= hi;
  }
};

// ---------------------------------------------------------------------------
// Moduli

enum class ModulusVariant { sphere, sphere_weighted, ball, interval, dt_ball, dt_ball_weighted };

inline std::string to_string(ModulusVariant v) {
  switch (v) {
    case ModulusVariant::sphere: return "sphere";
    case ModulusVariant::sphere_weighted: return "sphere_weighted";
    case ModulusVariant::ball: return "ball";
    case ModulusVariant::interval: return "interval";
    case ModulusVariant::dt_ball: return "dt_ball";
    case ModulusVariant::dt_ball_weighted: return "dt_ball_weighted";
  }
  return "?";
}

struct ModulusRequest {
  FunctionHandle f;
  int r = 2;
  double p = 2.0;
  double t = 0.1;
  WeightSpec weight;
  ModulusVariant variant = ModulusVariant::sphere;
  double mu = 0.5;
  int theta_grid_size = 16;

  void validate() const {
    if (r < 1) throw std::domain_error("modulus: r must be >= 1");
    if (!(p >= 1.0)) throw std::domain_error("modulus: p must be >= 1");
    if (!(t > 0.0 && t <= pi)) throw std::domain_error("modulus: t must lie in (0, pi]");
    if (theta_grid_size < 1) throw std::domain_error("modulus: theta grid needs at least one point");
    const auto& dom = f.domain;
    const bool half_int = std::abs(2.0 * mu + 1.0 - std::round(2.0 * mu + 1.0)) < 1e-12 && mu >= 0.0;
    switch (variant) {
      case ModulusVariant::sphere:
      case ModulusVariant::sphere_weighted:
        if (dom.kind != DomainKind::sphere || dom.d < 2)
          throw std::domain_error("modulus: sphere variant needs a function on a sphere");
        if (variant == ModulusVariant::sphere_weighted && weight.is_unit())
          throw std::domain_error("modulus: sphere_weighted needs a weight");
        break;
      case ModulusVariant::ball:
        if (!dom.is_ball_like()) throw std::domain_error("modulus: ball variant needs a function on a ball");
        if (!half_int) throw std::domain_error("modulus: ball variant needs mu = (m-1)/2 with m a positive integer");
        break;
      case ModulusVariant::interval:
        if (!dom.is_ball_like() || dom.d != 1)
          throw std::domain_error("modulus: interval variant needs a function on [-1,1]");
        if (!half_int) throw std::domain_error("modulus: interval variant needs mu = (m-1)/2 with m a positive integer");
        break;
      case ModulusVariant::dt_ball:
        if (!dom.is_ball_like()) throw std::domain_error("modulus: DT variant needs a function on a ball");
        if (std::abs(mu - 0.5) > 1e-12) throw std::domain_error("modulus: unweighted DT modulus needs mu = 1/2");
        break;
      case ModulusVariant::dt_ball_weighted:
        if (!dom.is_ball_like()) throw std::domain_error("modulus: DT variant needs a function on a ball");
        if (!(mu > 0.5)) throw std::domain_error("modulus: weighted DT modulus needs mu > 1/2");
        if (std::isinf(p)) throw std::domain_error("modulus: weighted DT modulus is not defined for p = infinity");
        break;
    }
  }
};

// theta_k = t 2^{-k/2}, k = 0..size: t itself plus `size` smaller steps.
inline std::vector<double> theta_grid(double t, int size) {
  std::vector<double> g;
  for (int k = 0; k <= size; ++k) g.push_back(t * std::pow(2.0, -0.5 * k));
  return g;
}

class ModulusEngine {
 public:
  // With rule == nullptr the norms are computed by adaptive fibered integration
  // (p < infinity) or on a default rule of degree `fallback_degree` (p = infinity).
  explicit ModulusEngine(ModulusRequest req, FiberOptions opt = {}, const QuadratureRule* rule = nullptr,
                         int fallback_degree = 64)
      : req_(std::move(req)), opt_(opt) {
    req_.validate();
    const auto& dom = req_.f.domain;
    d_ = dom.d;
    if (rule) {
      rule_ = std::make_shared<QuadratureRule>(*rule);
    } else if (std::isinf(req_.p)) {
      rule_ = std::make_shared<QuadratureRule>(dom.kind == DomainKind::sphere
                                                   ? sphere_rule(d_, fallback_degree)
                                                   : ball_rule(d_, std::max(req_.mu, 0.0), fallback_degree));
    }
    if (rule_) check_rule(*rule_);
    build_terms();
  }

  const ModulusRequest& request() const { return req_; }

  double operator()(double t) {
    if (!(t > 0.0 && t <= pi)) throw std::domain_error("modulus: t must lie in (0, pi]");
    const auto grid = theta_grid(t, req_.theta_grid_size);
    double euler = 0.0;
    for (double th : grid) euler = std::max(euler, angular_max(th));
    if (req_.variant == ModulusVariant::dt_ball || req_.variant == ModulusVariant::dt_ball_weighted) {
      double central = 0.0;
      for (double h : grid) central = std::max(central, central_max(h));
      if (req_.variant == ModulusVariant::dt_ball) return std::max(euler, central);
      return euler + central + one_sided(t);
    }
    return euler;
  }

  std::vector<double> curve(std::span<const double> ts) {
    std::vector<double> out;
    for (double t : ts) out.push_back((*this)(t));
    return out;
  }

  // max over the Euler (and tilde) terms at the single step theta
  double angular_max(double theta) {
    const long long key = std::llround(std::log2(theta) * 1e6);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    double best = 0.0;
    for (const auto& term : terms_) {
      best = std::max(best, term_norm(term, theta));
      if (term.signed_weight) best = std::max(best, term_norm(term, -theta));
    }
    cache_.emplace(key, best);
    return best;
  }

  // max_i of the central phi-difference norm at step h (over I_{i,rh} when weighted)
  double central_max(double h) {
    const long long key = std::llround(std::log2(h) * 1e6);
    auto it = central_cache_.find(key);
    if (it != central_cache_.end()) return it->second;
    double best = 0.0;
    const bool weighted = req_.variant == ModulusVariant::dt_ball_weighted;
    for (int i = 1; i <= d_; ++i) {
      RegionSpec reg{RegionSpec::Which::I, i, req_.r * h};
      auto [lo, hi] = weighted ? reg.bounds() : std::pair<double, double>{-1.0, 1.0};
      best = std::max(best, line_norm(i, LineKind::central, h, lo, hi, weighted ? &reg : nullptr));
    }
    central_cache_.emplace(key, best);
    return best;
  }

  // sup over h <= 12 r^2 t^2 of max_i (backward on J_{+1,i,rt} + forward on J_{-1,i,rt})
  double one_sided(double t) {
    const int r = req_.r;
    const double hmax = 12.0 * r * r * t * t;
    double best = 0.0;
    for (double h : theta_grid(hmax, req_.theta_grid_size)) {
      for (int i = 1; i <= d_; ++i) {
        RegionSpec jp{RegionSpec::Which::J_plus, i, r * t}, jm{RegionSpec::Which::J_minus, i, r * t};
        auto [lp, hp] = jp.bounds();
        auto [lm, hm] = jm.bounds();
        double v = line_norm(i, LineKind::backward, h, lp, hp, &jp) + line_norm(i, LineKind::forward, h, lm, hm, &jm);
        best = std::max(best, v);
      }
    }
    return best;
  }

 private:
  enum class Geometry { sphere, ball };
  struct Term {
    Geometry geom;
    FunctionHandle g;
    int i0, j0;
    double nu;      // ball weight W_nu
    double scale;   // multiplies the integral before the p-th root
    bool signed_weight;
    std::shared_ptr<QuadratureRule> rule;  // rule-based evaluation only
  };

  void check_rule(const QuadratureRule& R) const {
    const auto& dom = req_.f.domain;
    if (R.dim != d_) throw std::domain_error("modulus: rule dimension does not match f");
    if ((dom.kind == DomainKind::sphere) != (R.domain.kind == DomainKind::sphere))
      throw std::domain_error("modulus: rule domain does not match f");
    if (dom.kind != DomainKind::sphere && req_.variant != ModulusVariant::interval &&
        std::abs(R.mu - req_.mu) > 1e-12)
      throw std::domain_error("modulus: rule weight parameter differs from the requested mu");
  }

  void build_terms() {
    const auto& f = req_.f;
    const double mu = req_.mu;
    const int deg = rule_ ? rule_->exact_degree : 0;
    switch (req_.variant) {
      case ModulusVariant::sphere:
      case ModulusVariant::sphere_weighted: {
        const bool sw = !req_.weight.rotation_invariant();
        for (int i = 0; i < d_; ++i)
          for (int j = i + 1; j < d_; ++j) terms_.push_back({Geometry::sphere, f, i, j, 0.0, 1.0, sw, rule_});
        weighted_ = !req_.weight.is_unit();
        break;
      }
      case ModulusVariant::ball:
      case ModulusVariant::interval:
      case ModulusVariant::dt_ball:
      case ModulusVariant::dt_ball_weighted: {
        for (int i = 0; i < d_; ++i)
          for (int j = i + 1; j < d_; ++j) terms_.push_back({Geometry::ball, f, i, j, mu, 1.0, false, rule_});
        if (req_.variant == ModulusVariant::ball || req_.variant == ModulusVariant::interval) {
          double scale = 1.0;
          std::shared_ptr<QuadratureRule> trule;
          if (mu < 0.25) {
            // m = 1: the tilde norm is taken on S^d
            auto F = lift_to_sphere(f, 1);
            if (req_.variant == ModulusVariant::interval) scale = 1.0 / sphere_area(d_ + 1);
            if (rule_) trule = std::make_shared<QuadratureRule>(sphere_rule(d_ + 1, deg));
            for (int i = 0; i < d_; ++i) terms_.push_back({Geometry::sphere, F, i, d_, 0.0, scale, false, trule});
          } else {
            auto F = tilde_extension(f);
            if (req_.variant == ModulusVariant::interval) scale = 1.0 / ball_weight_mass(d_ + 1, mu - 0.5);
            if (rule_) trule = std::make_shared<QuadratureRule>(detail::ball_rule_impl(d_ + 1, mu - 0.5, deg, 0.5));
            for (int i = 0; i < d_; ++i)
              terms_.push_back({Geometry::ball, F, i, d_, mu - 0.5, scale, false, trule});
          }
        }
        break;
      }
    }
  }

  double finish(double integral, double scale) const { return std::pow(std::max(0.0, scale * integral), 1.0 / req_.p); }

  double term_norm(const Term& term, double theta) {
    const WeightSpec* w = weighted_ ? &req_.weight : nullptr;
    if (term.rule) {
      const auto& R = *term.rule;
      const bool sup = std::isinf(req_.p);
      double acc = 0.0;
      for (std::size_t q = 0; q < R.size(); ++q) {
        auto x = R.node(q);
        double v = std::abs(euler_difference(term.g, term.i0 + 1, term.j0 + 1, theta, req_.r, x));
        if (sup) {
          acc = std::max(acc, v);
        } else {
          acc += R.weights[q] * (w ? (*w)(x) : 1.0) * detail::abs_pow(v, req_.p);
        }
      }
      return sup ? acc : finish(acc, term.scale);
    }
    const auto st = AngularStencil::difference(req_.r, theta);
    double integral = term.geom == Geometry::sphere
                          ? sphere_plane_integral(term.g, term.i0, term.j0, st, req_.p, w, opt_)
                          : ball_plane_integral(term.g, term.i0, term.j0, st, req_.p, term.nu, w, opt_);
    return finish(integral, term.scale);
  }

  double line_norm(int i, LineKind kind, double h, double lo, double hi, const RegionSpec* region) {
    if (!(hi > lo)) return 0.0;
    if (rule_) {
      const auto& R = *rule_;
      const bool sup = std::isinf(req_.p);
      double acc = 0.0;
      for (std::size_t q = 0; q < R.size(); ++q) {
        auto x = R.node(q);
        if (region && !region->contains(x)) continue;
        double v = kind == LineKind::central
                       ? central_difference_phi(req_.f, i, h, req_.r, x)
                       : forward_backward_difference(req_.f, i, h, req_.r, x, kind == LineKind::forward ? 1 : -1);
        v = std::abs(v);
        if (sup)
          acc = std::max(acc, v);
        else
          acc += R.weights[q] * detail::abs_pow(v, req_.p);
      }
      return sup ? acc : finish(acc, 1.0);
    }
    return finish(ball_line_integral(req_.f, i - 1, kind, req_.r, h, req_.p, req_.mu, lo, hi, opt_), 1.0);
  }

  ModulusRequest req_;
  FiberOptions opt_;
  int d_ = 0;
  bool weighted_ = false;
  std::shared_ptr<QuadratureRule> rule_;
  std::vector<Term> terms_;
  std::map<long long, double> cache_;
  std::map<long long, double> central_cache_;
};

// omega_r(f, t)_p: sup over the theta grid in (0, t] and max over planes.
inline double modulus(const ModulusRequest& req, const QuadratureRule& rule) {
  ModulusEngine eng(req, {}, &rule);
  return eng(req.t);
}

inline double modulus(const ModulusRequest& req, const FiberOptions& opt = {}) {
  ModulusEngine eng(req, opt);
  return eng(req.t);
}

inline double dt_modulus(const ModulusRequest& req, const QuadratureRule& rule) {
  if (req.variant != ModulusVariant::dt_ball && req.variant != ModulusVariant::dt_ball_weighted)
    throw std::domain_error("dt_modulus: request is not a DT variant");
  return modulus(req, rule);
}

inline double dt_modulus(const ModulusRequest& req, const FiberOptions& opt = {}) {
  if (req.variant != ModulusVariant::dt_ball && req.variant != ModulusVariant::dt_ball_weighted)
    throw std::domain_error("dt_modulus: request is not a DT variant");
  return modulus(req, opt);
}

}  // namespace emod
