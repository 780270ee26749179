#pragma once

#include <Eigen/Eigenvalues>

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <tuple>
#include <vector>

namespace emod {

// Three-term recurrence of the orthonormal Jacobi polynomials for the weight
// (1-x)^a (1+x)^b on [-1,1]:
//   x p_k = b_{k+1} p_{k+1} + a_k p_k + b_k p_{k-1},   p_0 = 1/sqrt(m0).
struct JacobiRecurrence {
  double a = 0.0, b = 0.0;
  std::vector<double> diag;  // a_k
  std::vector<double> off;   // off[k] = b_k, off[0] unused
  double log_m0 = 0.0;       // log of the total mass

  JacobiRecurrence(double alpha, double beta, int n) : a(alpha), b(beta) {
    if (alpha <= -1.0 || beta <= -1.0) throw std::domain_error("Jacobi exponents must exceed -1");
    diag.resize(n + 1);
    off.assign(n + 2, 0.0);
    const double ab = alpha + beta;
    for (int k = 0; k <= n; ++k) {
      if (k == 0) {
        diag[0] = (beta - alpha) / (ab + 2.0);
      } else {
        double s = 2.0 * k + ab;
        diag[k] = (beta * beta - alpha * alpha) / (s * (s + 2.0));
      }
    }
    for (int k = 1; k <= n + 1; ++k) {
      double s = 2.0 * k + ab;
      double v;
      if (k == 1)
        v = 4.0 * (1.0 + alpha) * (1.0 + beta) / ((2.0 + ab) * (2.0 + ab) * (3.0 + ab));
      else
        v = 4.0 * k * (k + alpha) * (k + beta) * (k + ab) / (s * s * (s + 1.0) * (s - 1.0));
      off[k] = std::sqrt(v);
    }
    log_m0 = (ab + 1.0) * std::log(2.0) + std::lgamma(alpha + 1.0) + std::lgamma(beta + 1.0) -
             std::lgamma(ab + 2.0);
  }

  // p_0..p_n at x; out must hold n+1 values, n <= construction degree.
  void evaluate(double x, int n, double* out) const {
    out[0] = std::exp(-0.5 * log_m0);
    if (n == 0) return;
    out[1] = (x - diag[0]) * out[0] / off[1];
    for (int k = 1; k < n; ++k) out[k + 1] = ((x - diag[k]) * out[k] - off[k] * out[k - 1]) / off[k + 1];
  }
};

struct GaussRule1D {
  std::vector<double> x;
  std::vector<double> w;
};

// Golub-Welsch: m-point Gauss rule for (1-x)^alpha (1+x)^beta on [-1,1].
inline GaussRule1D gauss_jacobi(int m, double alpha, double beta) {
  if (m < 1) throw std::domain_error("gauss_jacobi: need at least one node");
  JacobiRecurrence rec(alpha, beta, m);
  GaussRule1D out;
  out.x.resize(m);
  out.w.resize(m);
  if (m == 1) {
    out.x[0] = rec.diag[0];
    out.w[0] = std::exp(rec.log_m0);
    return out;
  }
  Eigen::VectorXd dg(m), sd(m - 1);
  for (int k = 0; k < m; ++k) dg[k] = rec.diag[k];
  for (int k = 0; k < m - 1; ++k) sd[k] = rec.off[k + 1];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(dg, sd, Eigen::ComputeEigenvectors);
  const double m0 = std::exp(rec.log_m0);
  for (int k = 0; k < m; ++k) {
    out.x[k] = es.eigenvalues()[k];
    double v = es.eigenvectors()(0, k);
    out.w[k] = m0 * v * v;
  }
  return out;
}

inline GaussRule1D gauss_legendre(int m) { return gauss_jacobi(m, 0.0, 0.0); }

// Cached Gauss-Legendre rules, reused by the panel integrators.
inline const GaussRule1D& gauss_legendre_cached(int m) {
  static std::mutex mtx;
  static std::map<int, GaussRule1D> cache;
  std::lock_guard<std::mutex> lock(mtx);
  auto it = cache.find(m);
  if (it == cache.end()) it = cache.emplace(m, gauss_legendre(m)).first;
  return it->second;
}

}  // namespace emod
