#pragma once

#include "emod/core_math.hpp"

#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace emod {

// Multivariate polynomial in the monomial basis with exact differentiation.
class Polynomial {
 public:
  using Exponents = std::vector<int>;

  explicit Polynomial(int dim = 1) : dim_(dim) {}

  int dim() const { return dim_; }

  int degree() const {
    int deg = 0;
    for (const auto& [e, c] : terms_) {
      int s = 0;
      for (int k : e) s += k;
      if (c != 0.0) deg = std::max(deg, s);
    }
    return deg;
  }

  void add_term(const Exponents& e, double c) {
    if (static_cast<int>(e.size()) != dim_) throw std::invalid_argument("Polynomial: exponent length");
    terms_[e] += c;
  }

  static Polynomial constant(int dim, double c) {
    Polynomial p(dim);
    p.add_term(Exponents(dim, 0), c);
    return p;
  }

  static Polynomial coordinate(int dim, int i, double c = 1.0) {
    Polynomial p(dim);
    Exponents e(dim, 0);
    e[i] = 1;
    p.add_term(e, c);
    return p;
  }

  // coefficients i.i.d. uniform on [-1, 1] for every monomial of degree <= n
  static Polynomial random(int dim, int n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    Polynomial p(dim);
    Exponents e(dim, 0);
    auto rec = [&](auto&& self, int k, int left) -> void {
      if (k == dim) {
        p.add_term(e, U(rng));
        return;
      }
      for (int a = 0; a <= left; ++a) {
        e[k] = a;
        self(self, k + 1, left - a);
      }
      e[k] = 0;
    };
    rec(rec, 0, n);
    return p;
  }

  double operator()(std::span<const double> x) const {
    double s = 0.0;
    for (const auto& [e, c] : terms_) {
      double v = c;
      for (int k = 0; k < dim_; ++k)
        for (int q = 0; q < e[k]; ++q) v *= x[k];
      s += v;
    }
    return s;
  }

  Polynomial derivative(int i) const {
    Polynomial out(dim_);
    for (const auto& [e, c] : terms_) {
      if (e[i] == 0) continue;
      Exponents f = e;
      f[i] -= 1;
      out.add_term(f, c * e[i]);
    }
    return out;
  }

  Polynomial times_coordinate(int i) const {
    Polynomial out(dim_);
    for (const auto& [e, c] : terms_) {
      Exponents f = e;
      f[i] += 1;
      out.add_term(f, c);
    }
    return out;
  }

  Polynomial operator+(const Polynomial& o) const {
    Polynomial out = *this;
    for (const auto& [e, c] : o.terms_) out.terms_[e] += c;
    return out;
  }

  Polynomial operator-(const Polynomial& o) const { return *this + o * -1.0; }

  Polynomial operator*(double s) const {
    Polynomial out = *this;
    for (auto& [e, c] : out.terms_) c *= s;
    return out;
  }

  Polynomial operator*(const Polynomial& o) const {
    Polynomial out(dim_);
    for (const auto& [e, c] : terms_)
      for (const auto& [f, d] : o.terms_) {
        Exponents g(dim_);
        for (int k = 0; k < dim_; ++k) g[k] = e[k] + f[k];
        out.terms_[g] += c * d;
      }
    return out;
  }

  // D_{i,j} = x_j d_i - x_i d_j, 0-based
  Polynomial dij(int i, int j) const { return derivative(i).times_coordinate(j) - derivative(j).times_coordinate(i); }

  FunctionHandle as_function(Domain dom) const {
    auto self = *this;
    return make_function(dom, [self](std::span<const double> x) { return self(x); }, degree());
  }

  const std::map<Exponents, double>& terms() const { return terms_; }

 private:
  int dim_;
  std::map<Exponents, double> terms_;
};

}  // namespace emod
