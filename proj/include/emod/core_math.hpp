#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace emod {

using Point = std::vector<double>;

enum class DomainKind { sphere, ball, interval };

// d is the ambient dimension: sphere(d) is S^{d-1} in R^d, ball(d) is B^d.
struct Domain {
  DomainKind kind = DomainKind::sphere;
  int d = 3;

  static Domain sphere(int d) { return {DomainKind::sphere, d}; }
  static Domain ball(int d) { return {DomainKind::ball, d}; }
  static Domain interval() { return {DomainKind::interval, 1}; }

  bool is_ball_like() const { return kind != DomainKind::sphere; }
  bool operator==(const Domain&) const = default;
};

inline std::string to_string(const Domain& dom) {
  switch (dom.kind) {
    case DomainKind::sphere: return "sphere(" + std::to_string(dom.d) + ")";
    case DomainKind::ball: return "ball(" + std::to_string(dom.d) + ")";
    case DomainKind::interval: return "interval";
  }
  return "?";
}

// Where a function stops being smooth. Integrators use this to place
// breakpoints; it never changes the value of anything.
//   points      - isolated singular points (sphere points or ball points)
//   hyperplanes - 1-based coordinates k such that f is rough across x_k = 0
//   boundary    - f is rough at the boundary of the ball
struct Features {
  std::vector<Point> points;
  std::vector<int> hyperplanes;
  bool boundary = false;

  bool empty() const { return points.empty() && hyperplanes.empty() && !boundary; }
};

struct FunctionHandle {
  std::function<double(std::span<const double>)> evaluate;
  Domain domain;
  std::optional<int> degree_hint;
  Features features;

  double operator()(std::span<const double> x) const { return evaluate(x); }
};

inline FunctionHandle make_function(Domain dom, std::function<double(std::span<const double>)> f,
                                    std::optional<int> degree = std::nullopt) {
  return FunctionHandle{std::move(f), dom, degree, {}};
}

// ---------------------------------------------------------------------------
// small vector helpers

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

inline double norm2(std::span<const double> a) { return dot(a, a); }
inline double norm(std::span<const double> a) { return std::sqrt(norm2(a)); }

inline constexpr double pi = std::numbers::pi;

// Surface area of S^{d-1}: 2 pi^{d/2} / Gamma(d/2).
inline double sphere_area(int d) {
  if (d < 1) throw std::domain_error("sphere_area: d must be >= 1");
  return 2.0 * std::pow(pi, 0.5 * d) / std::tgamma(0.5 * d);
}

// Integral of W_mu(x) = (1-|x|^2)^{mu-1/2} over B^d.
inline double ball_weight_mass(int d, double mu) {
  if (d < 1) throw std::domain_error("ball_weight_mass: d must be >= 1");
  if (mu < 0.0) throw std::domain_error("ball_weight_mass: mu must be >= 0");
  // pi^{d/2} Gamma(mu+1/2) / Gamma(mu+1/2+d/2)
  return std::pow(pi, 0.5 * d) *
         std::exp(std::lgamma(mu + 0.5) - std::lgamma(mu + 0.5 + 0.5 * d));
}

// binom(a+n-1... ) style generalized binomial binom(x, n) for real x.
inline double binomial(double x, int n) {
  if (n < 0) return 0.0;
  double b = 1.0;
  for (int k = 1; k <= n; ++k) b *= (x - n + k) / k;
  return b;
}

// ---------------------------------------------------------------------------
// Gegenbauer polynomials

struct GegenbauerParams {
  int n = 0;
  double lambda = 0.5;

  static GegenbauerParams from_dimension(int n, int d) {
    if (d < 3) throw std::domain_error("Gegenbauer index (d-2)/2 must be positive: d >= 3");
    return {n, 0.5 * (d - 2)};
  }
};

namespace detail {
inline void check_gegenbauer(int n, double lambda, double t) {
  if (n < 0) throw std::domain_error("gegenbauer: negative degree");
  if (!(lambda > 0.0)) throw std::domain_error("gegenbauer: lambda must be positive");
  if (!(std::abs(t) <= 1.0 + 1e-12)) throw std::domain_error("gegenbauer: |t| > 1");
}
}  // namespace detail

// Fills out[0..n] with C_k^lambda(t).
inline void gegenbauer_all(int n, double lambda, double t, std::span<double> out) {
  detail::check_gegenbauer(n, lambda, t);
  out[0] = 1.0;
  if (n == 0) return;
  out[1] = 2.0 * lambda * t;
  for (int k = 2; k <= n; ++k)
    out[k] = (2.0 * (k + lambda - 1.0) * t * out[k - 1] - (k + 2.0 * lambda - 2.0) * out[k - 2]) / k;
}

inline double gegenbauer(const GegenbauerParams& prm, double t) {
  detail::check_gegenbauer(prm.n, prm.lambda, t);
  if (prm.n == 0) return 1.0;
  double c0 = 1.0, c1 = 2.0 * prm.lambda * t;
  for (int k = 2; k <= prm.n; ++k) {
    double c2 = (2.0 * (k + prm.lambda - 1.0) * t * c1 - (k + 2.0 * prm.lambda - 2.0) * c0) / k;
    c0 = c1;
    c1 = c2;
  }
  return c1;
}

// C_n^lambda(1) = binom(n+2 lambda-1, n)
inline double gegenbauer_at_one(int n, double lambda) { return binomial(n + 2.0 * lambda - 1.0, n); }

// ---------------------------------------------------------------------------
// Smooth cutoff: 1 on [0,1], 0 on [2,inf).

inline double eta(double x) {
  if (x <= 1.0) return 1.0;
  if (x >= 2.0) return 0.0;
  auto h = [](double s) { return s > 0.0 ? std::exp(-1.0 / s) : 0.0; };
  double a = h(2.0 - x), b = h(x - 1.0);
  return a / (a + b);
}

// ---------------------------------------------------------------------------
// Zonal kernels on S^{d-1}

inline double zonal_kernel(int n, int d, double c) {
  auto prm = GegenbauerParams::from_dimension(n, d);
  return (n + prm.lambda) / prm.lambda * gegenbauer(prm, c);
}

// K_n(t) = sum_{k=0}^{2n} eta(k/n) (k+lambda)/lambda C_k^lambda(t)
inline double smoothed_kernel_Kn(int n, int d, double t) {
  if (n < 1) throw std::domain_error("smoothed_kernel_Kn: n must be >= 1");
  if (d < 3) throw std::domain_error("smoothed_kernel_Kn: d must be >= 3");
  detail::check_gegenbauer(0, 1.0, t);
  const double lambda = 0.5 * (d - 2);
  double c0 = 1.0, c1 = 2.0 * lambda * t;
  double sum = 1.0;  // k = 0 term
  for (int k = 1; k < 2 * n; ++k) {
    if (k >= 2) {
      double c2 = (2.0 * (k + lambda - 1.0) * t * c1 - (k + 2.0 * lambda - 2.0) * c0) / k;
      c0 = c1;
      c1 = c2;
    }
    double e = eta(static_cast<double>(k) / n);
    if (e == 0.0) break;
    sum += e * (k + lambda) / lambda * c1;
  }
  return sum;
}

// Tabulated eta(k/n)(k+lambda)/lambda so repeated kernel evaluations skip the exp calls.
class SmoothedKernel {
 public:
  SmoothedKernel(int n, int d) : n_(n), lambda_(0.5 * (d - 2)) {
    if (n < 1) throw std::domain_error("SmoothedKernel: n must be >= 1");
    if (d < 3) throw std::domain_error("SmoothedKernel: d must be >= 3");
    for (int k = 0; k < 2 * n; ++k) {
      double e = eta(static_cast<double>(k) / n);
      if (e == 0.0) break;
      coef_.push_back(e * (k + lambda_) / lambda_);
    }
  }

  int n() const { return n_; }

  double operator()(double t) const {
    t = std::clamp(t, -1.0, 1.0);
    double c0 = 1.0, c1 = 2.0 * lambda_ * t;
    double sum = coef_[0];
    if (coef_.size() > 1) sum += coef_[1] * c1;
    for (std::size_t k = 2; k < coef_.size(); ++k) {
      double c2 = (2.0 * (k + lambda_ - 1.0) * t * c1 - (k + 2.0 * lambda_ - 2.0) * c0) / k;
      c0 = c1;
      c1 = c2;
      sum += coef_[k] * c1;
    }
    return sum;
  }

 private:
  int n_;
  double lambda_;
  std::vector<double> coef_;
};

// c with |K_n(cos theta)| <= c n^{d-1} (1 + n theta)^{-ell} on `grid` equispaced theta in [0, pi].
inline double kernel_localization_constant(int n, int d, int ell = 6, int grid = 1000) {
  if (grid < 2) throw std::domain_error("kernel_localization_constant: grid needs at least 2 points");
  SmoothedKernel K(n, d);
  double c = 0.0;
  for (int k = 0; k < grid; ++k) {
    const double th = pi * k / (grid - 1);
    c = std::max(c, std::abs(K(std::cos(th))) * std::pow(1.0 + n * th, ell));
  }
  return c / std::pow(static_cast<double>(n), d - 1);
}

// ---------------------------------------------------------------------------
// Euler rotations. Axis indices are 1-based as in the mathematical notation.

struct EulerRotation {
  int i = 1;
  int j = 2;
  double t = 0.0;
  int d = 3;
};

namespace detail {
inline void check_plane(int i, int j, int d) {
  if (i < 1 || j < 1 || i > d || j > d || i == j)
    throw std::out_of_range("rotation plane (" + std::to_string(i) + "," + std::to_string(j) +
                            ") invalid for dimension " + std::to_string(d));
}
}  // namespace detail

// In place, 0-based indices, precomputed cos/sin.
inline void rotate_plane(std::span<double> x, int i0, int j0, double c, double s) {
  double xi = x[i0], xj = x[j0];
  x[i0] = xi * c - xj * s;
  x[j0] = xi * s + xj * c;
}

inline Point euler_rotate(const EulerRotation& rot, std::span<const double> x) {
  detail::check_plane(rot.i, rot.j, rot.d);
  if (static_cast<int>(x.size()) != rot.d)
    throw std::out_of_range("euler_rotate: point has wrong dimension");
  Point y(x.begin(), x.end());
  rotate_plane(y, rot.i - 1, rot.j - 1, std::cos(rot.t), std::sin(rot.t));
  return y;
}

inline double geodesic_distance(std::span<const double> x, std::span<const double> y) {
  if (std::abs(norm(x) - 1.0) > 1e-10 || std::abs(norm(y) - 1.0) > 1e-10)
    throw std::domain_error("geodesic_distance: inputs must be unit vectors");
  return std::acos(std::clamp(dot(x, y), -1.0, 1.0));
}

// Angle t with euler_rotate((i,j,t), x) = y.
inline double recover_rotation_angle(std::span<const double> x, std::span<const double> y, int i, int j) {
  const int d = static_cast<int>(x.size());
  detail::check_plane(i, j, d);
  if (y.size() != x.size()) throw std::domain_error("recover_rotation_angle: dimension mismatch");
  const int i0 = i - 1, j0 = j - 1;
  for (int k = 0; k < d; ++k)
    if (k != i0 && k != j0 && std::abs(x[k] - y[k]) > 1e-10)
      throw std::domain_error("recover_rotation_angle: points differ outside the plane");
  double s2 = x[i0] * x[i0] + x[j0] * x[j0];
  double s2y = y[i0] * y[i0] + y[j0] * y[j0];
  if (std::sqrt(s2) < 1e-12) throw std::domain_error("recover_rotation_angle: degenerate plane");
  if (std::abs(s2 - s2y) > 1e-10) throw std::domain_error("recover_rotation_angle: plane radii differ");
  double c = (x[i0] * y[i0] + x[j0] * y[j0]) / s2;
  double s = (x[i0] * y[j0] - x[j0] * y[i0]) / s2;
  return std::atan2(s, c);
}

// ---------------------------------------------------------------------------
// Lifts from the ball

// F(x, x') = f(x) on S^{d+m-1}.
inline FunctionHandle lift_to_sphere(const FunctionHandle& f, int m) {
  if (m < 1) throw std::domain_error("lift_to_sphere: m must be >= 1");
  if (!f.domain.is_ball_like()) throw std::domain_error("lift_to_sphere: f must live on a ball");
  const int d = f.domain.d;
  FunctionHandle F;
  auto inner = f.evaluate;
  F.evaluate = [inner, d](std::span<const double> x) { return inner(x.first(d)); };
  F.domain = Domain::sphere(d + m);
  F.degree_hint = f.degree_hint;
  F.features.hyperplanes = f.features.hyperplanes;
  for (const auto& z : f.features.points) {
    Point zz(z);
    double r2 = norm2(z);
    if (r2 > 1.0) r2 = 1.0;
    zz.push_back(std::sqrt(1.0 - r2));
    zz.resize(d + m, 0.0);
    F.features.points.push_back(zz);
  }
  if (f.features.boundary)
    for (int k = d + 1; k <= d + m; ++k) F.features.hyperplanes.push_back(k);
  return F;
}

// f~(x, x_{d+1}) = f(x) on B^{d+1}.
inline FunctionHandle tilde_extension(const FunctionHandle& f) {
  if (!f.domain.is_ball_like()) throw std::domain_error("tilde_extension: f must live on a ball");
  const int d = f.domain.d;
  FunctionHandle F;
  auto inner = f.evaluate;
  F.evaluate = [inner, d](std::span<const double> x) { return inner(x.first(d)); };
  F.domain = Domain::ball(d + 1);
  F.degree_hint = f.degree_hint;
  F.features.hyperplanes = f.features.hyperplanes;
  for (const auto& z : f.features.points) {
    Point zz(z);
    zz.push_back(0.0);
    F.features.points.push_back(zz);
  }
  if (f.features.boundary) {
    F.features.hyperplanes.push_back(d + 1);
    F.features.boundary = true;
  }
  return F;
}

}  // namespace emod
