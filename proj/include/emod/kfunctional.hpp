#pragma once

#include "emod/core_math.hpp"
#include "emod/harmonic.hpp"
#include "emod/quadrature.hpp"
#include "emod/smoothness.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>
#include <vector>

// Realized K-functionals in L^2 with g = V_n f = sum_k eta(k/n) proj_k f:
//   sphere:   |f - g| + n^{-r} max_{i<j} |D_{i,j}^r g|
//   ball:     |f - g|_mu + n^{-r} (max_{i<j} |D_{i,j}^r g|_mu + max_i |D_{i,d+1}^r g~|_{W_{mu-1/2}})
//   interval: the ball formula with d = 1 and the tilde norm scaled like the interval modulus.
// The orthogonal expansions come from the harmonic analyzers, so S^2, B^2 and
// [-1, 1] are covered; the tilde norms are reduced to integrals over B^d via
//   int_{-a}^{a} s^{2k} (a^2 - s^2)^{mu-1} ds = a^{2k+2mu-1} B(k+1/2, mu),  a = sqrt(1 - |x|^2),
// with D_{i,d+1} g~ = s d_i g and D_{i,d+1}^2 g~ = s^2 d_i^2 g - x_i d_i g.

namespace emod {

namespace detail {

inline double beta_fn(double a, double b) { return std::exp(std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b)); }

// per-node integrand of |D_{i,d+1}^r g~|^2 relative to W_mu dx on B^d
struct TildeIntegrand {
  int r;
  double b1, b3, b5;

  TildeIntegrand(int r_, double mu) : r(r_) {
    if (r < 1 || r > 2) throw std::domain_error("kfunctional: tilde term implemented for r = 1, 2");
    if (!(mu > 0.0)) throw std::domain_error("kfunctional: tilde term needs mu > 0");
    b1 = beta_fn(0.5, mu);
    b3 = beta_fn(1.5, mu);
    b5 = beta_fn(2.5, mu);
  }

  double operator()(double a2, double xi, double gi, double gii) const {
    if (r == 1) return gi * gi * a2 * b3;
    const double A = gii, B = xi * gi;
    return A * A * a2 * a2 * b5 - 2.0 * A * B * a2 * b3 + B * B * b1;
  }
};

}  // namespace detail

class KFunctionalEngine {
 public:
  // n_max bounds the n of later queries; the expansion is computed to degree 2 n_max.
  KFunctionalEngine(FunctionHandle f, ModulusVariant variant, double mu, int n_max, AnalyzerOptions opt = {})
      : f_(std::move(f)), variant_(variant), mu_(mu), L_(2 * n_max), opt_(opt) {
    if (n_max < 1) throw std::domain_error("kfunctional: n_max must be >= 1");
    const auto& dom = f_.domain;
    switch (variant_) {
      case ModulusVariant::sphere:
        if (dom.kind != DomainKind::sphere || dom.d != 3)
          throw std::domain_error("kfunctional: the sphere realization is available on S^2 (d = 3)");
        frames_[2] = std::make_shared<SphereHarmonicAnalysis>(analyze_sphere2(f_, L_, 2, opt_));
        break;
      case ModulusVariant::ball:
        if (!dom.is_ball_like() || dom.d != 2)
          throw std::domain_error("kfunctional: the ball realization is available on B^2");
        if (!(mu_ > 0.0)) throw std::domain_error("kfunctional: the ball realization needs mu > 0");
        disk_ = std::make_shared<DiskHarmonicAnalysis>(analyze_disk(f_, L_, mu_, opt_));
        break;
      case ModulusVariant::interval:
        if (!dom.is_ball_like() || dom.d != 1)
          throw std::domain_error("kfunctional: the interval realization needs a function on [-1,1]");
        if (!(mu_ > 0.0)) throw std::domain_error("kfunctional: the interval realization needs mu > 0");
        interval_ = std::make_shared<IntervalAnalysis>(analyze_interval(f_, L_, mu_, opt_));
        break;
      default:
        throw std::domain_error("kfunctional: variant " + to_string(variant_) + " has no realization");
    }
  }

  int max_n() const { return L_ / 2; }

  // |f|_2 in the norm of the variant
  double norm() const { return best_approx(0); }

  // E_n(f)_2, n <= 2 n_max
  double best_approx(int n) const {
    if (n < 0 || n > L_ + 1) throw std::domain_error("kfunctional: n outside the computed expansion");
    if (frames_[2]) return frames_[2]->best_approx(n);
    if (disk_) return disk_->best_approx(n);
    return interval_->best_approx(n);
  }

  // K_r(f, 1/n)_2 realized by V_n f
  double operator()(int n, int r = 2) {
    if (n < 1 || n > max_n()) throw std::domain_error("kfunctional: n outside [1, n_max]");
    if (r < 1) throw std::domain_error("kfunctional: r must be >= 1");
    auto mult = [n](int k) { return eta(static_cast<double>(k) / n); };
    const double tr = std::pow(static_cast<double>(n), -r);
    switch (variant_) {
      case ModulusVariant::sphere: {
        double dmax = 0.0;
        for (int pole = 0; pole < 3; ++pole) dmax = std::max(dmax, frame(pole).azimuthal_derivative_norm(r, mult));
        return frames_[2]->multiplier_error(mult) + tr * dmax;
      }
      case ModulusVariant::ball: {
        const detail::TildeIntegrand T(r, mu_);
        double t1 = 0.0, t2 = 0.0;
        visit_disk_synthesis(*disk_, mult, 4 * n + 4, [&](const DiskNode& nd) {
          const double a2 = std::max(0.0, 1.0 - nd.x * nd.x - nd.y * nd.y);
          t1 += nd.w * T(a2, nd.x, nd.gx, nd.gxx);
          t2 += nd.w * T(a2, nd.y, nd.gy, nd.gyy);
        });
        const double tilde = std::sqrt(std::max(0.0, std::max(t1, t2)));
        return disk_->multiplier_error(mult) + tr * (disk_->angular_derivative_norm(r, mult) + tilde);
      }
      default: {
        const detail::TildeIntegrand T(r, mu_);
        const auto& an = *interval_;
        const double a = mu_ - 0.5;
        const QuadratureRule R = interval_rule(mu_, 4 * n + 4);
        JacobiRecurrence rec(a, a, an.L + 1);
        std::vector<double> p(an.L + 2), dp(an.L + 2), ddp(an.L + 2);
        double t = 0.0;
        for (std::size_t q = 0; q < R.size(); ++q) {
          const double x = R.nodes[q];
          jacobi_with_derivatives(rec, x, an.L, p.data(), dp.data(), ddp.data());
          double g1 = 0.0, g2 = 0.0;
          for (int k = 0; k <= an.L; ++k) {
            const double c = mult(k) * an.coef[k];
            g1 += c * dp[k];
            g2 += c * ddp[k];
          }
          t += R.weights[q] * T(1.0 - x * x, x, g1, g2);
        }
        const double scale = 1.0 / ball_weight_mass(2, mu_ - 0.5);
        return an.multiplier_error(mult) + tr * std::sqrt(std::max(0.0, scale * t));
      }
    }
  }

 private:
  const SphereHarmonicAnalysis& frame(int pole) {
    if (!frames_[pole]) frames_[pole] = std::make_shared<SphereHarmonicAnalysis>(analyze_sphere2(f_, L_, pole, opt_));
    return *frames_[pole];
  }

  FunctionHandle f_;
  ModulusVariant variant_;
  double mu_;
  int L_;
  AnalyzerOptions opt_;
  std::shared_ptr<SphereHarmonicAnalysis> frames_[3];
  std::shared_ptr<DiskHarmonicAnalysis> disk_;
  std::shared_ptr<IntervalAnalysis> interval_;
};

// K_r(f, 1/n)_p realized by V_n f; p = 2 only.
inline double kfunctional_realized(const FunctionHandle& f, int r, int n, double p, ModulusVariant variant,
                                   double mu = 0.5, const AnalyzerOptions& opt = {}) {
  if (p != 2.0) throw std::domain_error("kfunctional: only p = 2 is realized");
  KFunctionalEngine K(f, variant, mu, n, opt);
  return K(n, r);
}

}  // namespace emod
