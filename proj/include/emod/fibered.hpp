#pragma once

#include "emod/core_math.hpp"
#include "emod/panels.hpp"
#include "emod/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

// Integrals of |difference|^p over the sphere and ball, organized along the
// fibers the difference operator moves on: circles in the rotation plane for
// Euler differences, coordinate lines for Ditzian-Totik differences. Each
// fiber is integrated adaptively with breakpoints at the (shifted) features of
// f, and the fibers are integrated adaptively over their parameters.

namespace emod {

struct FiberOptions {
  double rel_tol = 1e-2;   // relative accuracy requested at every level
  double coarse_tol = 0.0;  // if above rel_tol, a first pass at this accuracy sets absolute budgets for a second
  int max_evals = 6000;      // per adaptive call
  int rest_degree = 24;      // fixed rules for the leftover coordinates when d is large
};

// sum_k coef[k] f(Q_{k theta} x)
struct AngularStencil {
  double theta = 0.0;
  std::vector<double> coef;

  static AngularStencil difference(int r, double theta) {
    AngularStencil s;
    s.theta = theta;
    for (int k = 0; k <= r; ++k) s.coef.push_back(((k % 2) ? -1.0 : 1.0) * binomial(r, k));
    return s;
  }
};

enum class LineKind { central, forward, backward };

namespace detail {

inline double abs_pow(double v, double p) {
  v = std::abs(v);
  if (p == 2.0) return v * v;
  if (p == 1.0) return v;
  return std::pow(v, p);
}

// Differences at the level of rounding of their terms are treated as zero, so
// that invariant directions do not drive the adaptive refinement.
inline bool below_rounding(double acc, double mag) { return std::abs(acc) <= 64.0 * 2.2e-16 * mag; }

struct LevelTol {
  double rel = 1e-3;
  double abs = 0.0;

  AdaptiveOptions adaptive(int max_evals) const {
    AdaptiveOptions ao;
    ao.rel_tol = rel;
    ao.abs_tol = abs;
    ao.max_evals = max_evals;
    return ao;
  }
};

struct Tols {
  LevelTol inner, middle, outer;
};

// Runs `run(tols)` once coarsely, then again with every level's absolute
// tolerance set from the coarse estimate, so fibers that contribute little
// are not refined to their own relative accuracy. `measure` bounds the total
// weight of the levels outside the innermost one.
template <class Run>
double two_pass(Run&& run, const FiberOptions& opt, double measure) {
  if (!(opt.coarse_tol > opt.rel_tol)) {
    const LevelTol t{opt.rel_tol, 0.0};
    return run(Tols{t, t, t});
  }
  Tols coarse{{opt.coarse_tol, 0.0}, {opt.coarse_tol, 0.0}, {opt.coarse_tol, 0.0}};
  const double est = run(coarse);
  if (!(est > 0.0)) return est;
  const double budget = opt.rel_tol * est;
  Tols fine{{opt.rel_tol, 0.25 * budget / measure}, {opt.rel_tol, 0.25 * budget / std::sqrt(measure)},
            {opt.rel_tol, 0.5 * budget}};
  return run(fine);
}

inline double wrap_2pi(double a) {
  a = std::fmod(a, 2.0 * pi);
  return a < 0.0 ? a + 2.0 * pi : a;
}

inline std::vector<int> hyperplanes_with_weight(const FunctionHandle& f, const WeightSpec* w) {
  std::vector<int> hs;
  for (int h : f.features.hyperplanes) hs.push_back(h - 1);
  if (w && w->kind == WeightSpec::Kind::h_alpha) {
    for (const auto& v : w->directions)
      for (std::size_t k = 0; k < v.size(); ++k)
        if (std::abs(std::abs(v[k]) - 1.0) < 1e-14) hs.push_back(static_cast<int>(k));
  }
  return hs;
}

class CircleFibers {
 public:
  CircleFibers(const FunctionHandle& f, int i0, int j0, const AngularStencil& st, double p, const WeightSpec* w,
               const FiberOptions& opt)
      : f_(f), i0_(i0), j0_(j0), st_(st), p_(p), w_(w && !w->is_unit() ? w : nullptr), opt_(opt) {
    dim_ = f.domain.d;
    x_.assign(dim_, 0.0);
    y_.assign(dim_, 0.0);
    hyper_ = hyperplanes_with_weight(f, w_);
    for (std::size_t k = 0; k < st.coef.size(); ++k) {
      cs_.push_back(std::cos(k * st.theta));
      sn_.push_back(std::sin(k * st.theta));
    }
  }

  // integral over phi of |sum_k c_k f(base + R e(phi + k theta))|^p w, with base
  // held in x_ (coordinates i0, j0 ignored)
  double circle(double R, const LevelTol& tol) {
    if (R <= 0.0) return 0.0;
    std::vector<double> angles;
    std::vector<GradePoint> graded;
    const int r = static_cast<int>(st_.coef.size()) - 1;
    auto add = [&](double a) {
      for (int k = 0; k <= r; ++k) angles.push_back(wrap_2pi(a - k * st_.theta));
      graded.push_back({wrap_2pi(a), 1});
      graded.push_back({wrap_2pi(a - r * st_.theta), -1});
    };
    for (const auto& z : f_.features.points) {
      if (z[i0_] * z[i0_] + z[j0_] * z[j0_] > 1e-24) add(std::atan2(z[j0_], z[i0_]));
    }
    for (int h : hyper_) {
      if (h == i0_) {
        add(0.5 * pi);
        add(1.5 * pi);
      } else if (h == j0_) {
        add(0.0);
        add(pi);
      }
    }
    std::vector<double> breaks;
    if (angles.empty()) {
      breaks = make_breaks(0.0, 2.0 * pi, {}, pi / 2);
    } else {
      std::sort(angles.begin(), angles.end());
      const double a0 = angles.front();
      std::vector<double> feats;
      std::vector<GradePoint> grade;
      for (double a : angles) feats.push_back(a);
      for (const auto& g : graded) {
        const double u = g.at < a0 ? g.at + 2.0 * pi : g.at;
        for (double sh : {0.0, 2.0 * pi, -2.0 * pi}) grade.push_back({u + sh, g.side});
      }
      breaks = graded_breaks(a0, a0 + 2.0 * pi, feats, grade, st_.theta, pi / 2);
    }
    auto g = [&](double phi) { return point_value(phi, R); };
    return adaptive_integrate(g, breaks, tol.adaptive(opt_.max_evals)).value;
  }

  double point_value(double phi, double R) {
    const double c0 = std::cos(phi), s0 = std::sin(phi);
    std::copy(x_.begin(), x_.end(), y_.begin());
    double acc = 0.0, mag = 0.0;
    for (std::size_t k = 0; k < st_.coef.size(); ++k) {
      const double c = c0 * cs_[k] - s0 * sn_[k], s = s0 * cs_[k] + c0 * sn_[k];
      y_[i0_] = R * c;
      y_[j0_] = R * s;
      const double term = st_.coef[k] * f_(y_);
      acc += term;
      mag += std::abs(term);
    }
    double v = abs_pow(below_rounding(acc, mag) ? 0.0 : acc, p_);
    if (w_ && v != 0.0) {
      y_[i0_] = R * c0;
      y_[j0_] = R * s0;
      v *= (*w_)(y_);
    }
    return v;
  }

  // Features of the in-plane radius: asin(|z_plane| / scale).
  std::vector<double> radial_features(double scale) const {
    std::vector<double> out;
    if (scale <= 0.0) return out;
    for (const auto& z : f_.features.points) {
      double s = std::sqrt(z[i0_] * z[i0_] + z[j0_] * z[j0_]) / scale;
      if (s < 1.0) out.push_back(std::asin(s));
    }
    return out;
  }

  std::vector<int> rest_indices() const {
    std::vector<int> rest;
    for (int k = 0; k < dim_; ++k)
      if (k != i0_ && k != j0_) rest.push_back(k);
    return rest;
  }

  const FunctionHandle& f_;
  int i0_, j0_, dim_;
  AngularStencil st_;
  double p_;
  const WeightSpec* w_;
  FiberOptions opt_;
  Point x_, y_;
  std::vector<int> hyper_;
  std::vector<double> cs_, sn_;
};

}  // namespace detail

// Integral over S^{d-1} (unnormalized surface measure) of |stencil f|^p w for
// the rotation plane (i0, j0), 0-based.
inline double sphere_plane_integral(const FunctionHandle& f, int i0, int j0, const AngularStencil& st, double p,
                                    const WeightSpec* w = nullptr, const FiberOptions& opt = {}) {
  detail::CircleFibers cf(f, i0, j0, st, p, w, opt);
  const int D = cf.dim_;
  if (D == 2) {
    detail::LevelTol t{opt.rel_tol, 0.0};
    return cf.circle(1.0, t);
  }
  auto rest = cf.rest_indices();
  QuadratureRule restr;
  if (D == 3) {
    restr.dim = 1;
    restr.nodes = {1.0, -1.0};
    restr.weights = {1.0, 1.0};
  } else {
    restr = sphere_rule(D - 2, opt.rest_degree);
  }
  auto run = [&](const detail::Tols& tol) {
    double total = 0.0;
    for (std::size_t q = 0; q < restr.size(); ++q) {
      auto y = restr.node(q);
      auto g = [&](double beta) {
        const double s = std::sin(beta), c = std::cos(beta);
        for (std::size_t k = 0; k < rest.size(); ++k) cf.x_[rest[k]] = c * y[k];
        double wgt = s * (D == 3 ? 1.0 : std::pow(c, D - 3));
        return wgt == 0.0 ? 0.0 : wgt * cf.circle(s, tol.inner);
      };
      auto feats = cf.radial_features(1.0);
      auto breaks = graded_breaks(0.0, 0.5 * pi, feats, grade_both(feats), st.theta, pi / 8);
      total += restr.weights[q] * adaptive_integrate(g, breaks, tol.outer.adaptive(opt.max_evals)).value;
    }
    return total;
  };
  return detail::two_pass(run, opt, restr.mass());
}

// Integral over B^d of |stencil f|^p W_nu for the rotation plane (i0, j0).
// nu > -1/2 is allowed here (the interval modulus needs W_{mu-1/2}).
inline double ball_plane_integral(const FunctionHandle& f, int i0, int j0, const AngularStencil& st, double p,
                                  double nu, const WeightSpec* w = nullptr, const FiberOptions& opt = {}) {
  detail::CircleFibers cf(f, i0, j0, st, p, w, opt);
  const int D = cf.dim_;
  auto rest = cf.rest_indices();
  auto beta_integral = [&](double amp, const detail::LevelTol& mid, const detail::LevelTol& in) {
    auto g = [&](double beta) {
      const double s = std::sin(beta), c = std::cos(beta);
      double wgt = s * (nu == 0.0 ? 1.0 : std::pow(c, 2.0 * nu));
      return wgt == 0.0 ? 0.0 : wgt * cf.circle(amp * s, in);
    };
    auto feats = cf.radial_features(amp);
    auto grade = grade_both(feats);
    if (f.features.boundary && amp > 0.5) grade.push_back({0.5 * pi, -1});
    auto breaks = graded_breaks(0.0, 0.5 * pi, feats, grade, st.theta, pi / 8);
    return adaptive_integrate(g, breaks, mid.adaptive(opt.max_evals)).value;
  };
  if (D == 2) {
    auto run = [&](const detail::Tols& tol) { return beta_integral(1.0, tol.outer, tol.inner); };
    return detail::two_pass(run, opt, 1.0);
  }
  if (D == 3) {
    const int k = rest[0];
    std::vector<double> feats;
    for (const auto& z : f.features.points) feats.push_back(std::asin(std::clamp(z[k], -1.0, 1.0)));
    for (int h : cf.hyper_)
      if (h == k) feats.push_back(0.0);
    auto run = [&](const detail::Tols& tol) {
      auto g = [&](double gamma) {
        const double v = std::sin(gamma), a = std::cos(gamma);
        if (a <= 0.0) return 0.0;
        cf.x_[k] = v;
        return std::pow(a, 2.0 * nu + 2.0) * beta_integral(a, tol.middle, tol.inner);
      };
      return adaptive_integrate(g, graded_breaks(-0.5 * pi, 0.5 * pi, feats, grade_both(feats), st.theta, pi / 8),
                                tol.outer.adaptive(opt.max_evals))
          .value;
    };
    return detail::two_pass(run, opt, pi);
  }
  QuadratureRule restr = ball_rule(D - 2, nu + 1.0, opt.rest_degree);
  auto run = [&](const detail::Tols& tol) {
    double total = 0.0;
    for (std::size_t q = 0; q < restr.size(); ++q) {
      auto v = restr.node(q);
      for (std::size_t k = 0; k < rest.size(); ++k) cf.x_[rest[k]] = v[k];
      const double a = std::sqrt(std::max(0.0, 1.0 - norm2(v)));
      total += restr.weights[q] * beta_integral(a, tol.outer, tol.inner);
    }
    return total;
  };
  return detail::two_pass(run, opt, restr.mass());
}

// Integral over {x in B^d : lo <= x_a / sqrt(1 - |x^_a|^2) <= hi} of
// |line difference of f along e_a|^p W_nu.
//   central:  sum_k c_k f(x + (r/2 - k) h phi(x) e_a), zero when a node leaves the ball
//   forward:  sum_k c_k f(x + k h e_a),  backward: sum_k c_k f(x - k h e_a)
inline double ball_line_integral(const FunctionHandle& f, int a0, LineKind kind, int r, double h, double p, double nu,
                                 double lo, double hi, const FiberOptions& opt = {}) {
  const int D = f.domain.d;
  lo = std::max(lo, -1.0);
  hi = std::min(hi, 1.0);
  if (!(hi > lo)) return 0.0;
  std::vector<double> coef;
  for (int k = 0; k <= r; ++k) coef.push_back(((k % 2) ? -1.0 : 1.0) * binomial(r, k));
  Point x(D, 0.0), y(D, 0.0);
  std::vector<int> hyper;
  for (int hp : f.features.hyperplanes) hyper.push_back(hp - 1);
  std::vector<int> rest;
  for (int k = 0; k < D; ++k)
    if (k != a0) rest.push_back(k);

  auto value = [&](double amp, double psi) {
    const double xa = amp * std::sin(psi);
    std::copy(x.begin(), x.end(), y.begin());
    double acc = 0.0, mag = 0.0;
    if (kind == LineKind::central) {
      const double step = h * amp * std::cos(psi);
      if (std::abs(xa) + 0.5 * r * step > amp) return 0.0;
      for (int k = 0; k <= r; ++k) {
        y[a0] = xa + (0.5 * r - k) * step;
        const double term = coef[k] * f(y);
        acc += term;
        mag += std::abs(term);
      }
    } else {
      const double sg = kind == LineKind::forward ? 1.0 : -1.0;
      if (std::abs(xa + sg * r * h) > amp) return 0.0;
      for (int k = 0; k <= r; ++k) {
        y[a0] = xa + sg * k * h;
        const double term = coef[k] * f(y);
        acc += term;
        mag += std::abs(term);
      }
    }
    if (detail::below_rounding(acc, mag)) return 0.0;
    double wgt = nu == 0.0 ? 1.0 : std::pow(std::cos(psi), 2.0 * nu);
    return wgt * detail::abs_pow(acc, p);
  };

  auto line = [&](double amp, const detail::LevelTol& tol) {
    if (amp <= 0.0) return 0.0;
    std::vector<double> feats;
    auto add_x = [&](double xa) {
      double s = xa / amp;
      if (s > -1.0 && s < 1.0) feats.push_back(std::asin(s));
    };
    for (const auto& z : f.features.points) {
      add_x(z[a0]);
      if (kind == LineKind::forward)
        for (int k = 1; k <= r; ++k) add_x(z[a0] - k * h);
      if (kind == LineKind::backward)
        for (int k = 1; k <= r; ++k) add_x(z[a0] + k * h);
    }
    for (int hp : hyper)
      if (hp == a0) {
        feats.push_back(0.0);
        if (kind == LineKind::forward)
          for (int k = 1; k <= r; ++k) add_x(-k * h);
        if (kind == LineKind::backward)
          for (int k = 1; k <= r; ++k) add_x(k * h);
      }
    // where the stencil leaves the ball
    if (kind == LineKind::central) {
      const double c = 0.5 * r * h;
      const double ps = std::asin(1.0 / std::sqrt(1.0 + c * c)) - std::atan(c);
      feats.push_back(ps);
      feats.push_back(-ps);
    } else if (kind == LineKind::forward) {
      add_x(amp - r * h);
    } else {
      add_x(-amp + r * h);
    }
    auto g = [&](double psi) { return value(amp, psi); };
    return adaptive_integrate(g, graded_breaks(std::asin(lo), std::asin(hi), feats, grade_both(feats), h, pi / 8),
                              tol.adaptive(opt.max_evals))
        .value;
  };

  if (D == 1) {
    detail::LevelTol t{opt.rel_tol, 0.0};
    return line(1.0, t);
  }
  if (D == 2) {
    const int k = rest[0];
    std::vector<double> feats;
    for (const auto& z : f.features.points) feats.push_back(std::asin(std::clamp(z[k], -1.0, 1.0)));
    for (int hp : hyper)
      if (hp == k) feats.push_back(0.0);
    auto run = [&](const detail::Tols& tol) {
      auto g = [&](double gamma) {
        const double a = std::cos(gamma);
        if (a <= 0.0) return 0.0;
        x[k] = std::sin(gamma);
        return std::pow(a, 2.0 * nu + 1.0) * line(a, tol.inner);
      };
      return adaptive_integrate(g, graded_breaks(-0.5 * pi, 0.5 * pi, feats, grade_both(feats), h, pi / 8),
                                tol.outer.adaptive(opt.max_evals))
          .value;
    };
    return detail::two_pass(run, opt, pi);
  }
  // (1 - |v|^2)^nu on B^{d-1} is W_{nu+1/2}
  QuadratureRule restr = ball_rule(D - 1, nu + 0.5, opt.rest_degree);
  auto run = [&](const detail::Tols& tol) {
    double total = 0.0;
    for (std::size_t q = 0; q < restr.size(); ++q) {
      auto v = restr.node(q);
      for (std::size_t k = 0; k < rest.size(); ++k) x[rest[k]] = v[k];
      const double a = std::sqrt(std::max(0.0, 1.0 - norm2(v)));
      total += restr.weights[q] * line(a, tol.inner);
    }
    return total;
  };
  return detail::two_pass(run, opt, restr.mass());
}

}  // namespace emod
