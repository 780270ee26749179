#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <queue>
#include <vector>

namespace emod {

// Globally adaptive Gauss-Kronrod (7/15) integration over a union of panels.
// The panel endpoints are where the integrand may be rough; nodes never land on them.
struct AdaptiveOptions {
  double rel_tol = 1e-7;
  double abs_tol = 0.0;
  int max_evals = 20000;
  double min_width = 1e-13;
};

struct AdaptiveResult {
  double value = 0.0;
  double error = 0.0;
  int evals = 0;
};

namespace detail {

inline constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
// Gauss weights for kXgk[1], kXgk[3], kXgk[5], kXgk[7]
inline constexpr double kWg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                                  0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double a, b, value, error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

template <class F>
Segment gk15(F& f, double a, double b) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double fc = f(c);
  double k = fc * kWgk[7], g = fc * kWg[3];
  for (int q = 0; q < 7; ++q) {
    double dx = h * kXgk[q];
    double s = f(c - dx) + f(c + dx);
    k += kWgk[q] * s;
    if (q % 2 == 1) g += kWg[q / 2] * s;
  }
  return {a, b, k * h, std::abs((k - g) * h)};
}

}  // namespace detail

inline constexpr int kGkEvals = 15;

template <class F>
AdaptiveResult adaptive_integrate(F&& f, const std::vector<double>& breaks, const AdaptiveOptions& opt = {}) {
  AdaptiveResult res;
  std::priority_queue<detail::Segment> heap;
  double total = 0.0, err = 0.0;
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    if (!(breaks[k + 1] > breaks[k])) continue;
    auto s = detail::gk15(f, breaks[k], breaks[k + 1]);
    res.evals += kGkEvals;
    total += s.value;
    err += s.error;
    heap.push(s);
  }
  while (!heap.empty()) {
    if (err <= std::max(opt.abs_tol, opt.rel_tol * std::abs(total))) break;
    if (res.evals + 2 * kGkEvals > opt.max_evals) break;
    auto s = heap.top();
    if (s.b - s.a < opt.min_width) break;
    heap.pop();
    const double m = 0.5 * (s.a + s.b);
    auto l = detail::gk15(f, s.a, m);
    auto r = detail::gk15(f, m, s.b);
    res.evals += 2 * kGkEvals;
    total += l.value + r.value - s.value;
    err += l.error + r.error - s.error;
    heap.push(l);
    heap.push(r);
  }
  // recompute from the leaves to shed accumulated rounding
  total = 0.0;
  err = 0.0;
  while (!heap.empty()) {
    total += heap.top().value;
    err += heap.top().error;
    heap.pop();
  }
  res.value = total;
  res.error = err;
  return res;
}

// Sorted, deduplicated breakpoints in [a, b] (features outside are dropped),
// with panels split so none is wider than max_width.
inline std::vector<double> make_breaks(double a, double b, std::vector<double> features, double max_width) {
  std::vector<double> pts{a, b};
  const double eps = 1e-14 * std::max(1.0, std::abs(b - a));
  for (double x : features)
    if (x > a + eps && x < b - eps) pts.push_back(x);
  std::sort(pts.begin(), pts.end());
  std::vector<double> out;
  for (double x : pts)
    if (out.empty() || x - out.back() > eps) out.push_back(x);
  if (out.back() < b) out.back() = b;
  std::vector<double> split;
  for (std::size_t k = 0; k + 1 < out.size(); ++k) {
    int m = std::max(1, static_cast<int>(std::ceil((out[k + 1] - out[k]) / max_width)));
    for (int q = 0; q < m; ++q) split.push_back(out[k] + (out[k + 1] - out[k]) * q / m);
  }
  split.push_back(out.back());
  return split;
}

// A point the breakpoints are graded toward; side > 0 grades only above it,
// side < 0 only below, 0 both ways.
struct GradePoint {
  double at;
  int side = 0;
};

// Breakpoints graded geometrically (by `ratio`) away from each graded point,
// starting at distance `scale`, so the adaptive rule sees structure of that
// size before deciding a panel is smooth.
inline std::vector<double> graded_breaks(double a, double b, std::vector<double> features,
                                         const std::vector<GradePoint>& graded, double scale, double max_width,
                                         double ratio = 8.0) {
  if (scale > 0.0) {
    for (const auto& g : graded) {
      features.push_back(g.at);
      for (double d = scale; d < max_width; d *= ratio) {
        if (g.side <= 0) features.push_back(g.at - d);
        if (g.side >= 0) features.push_back(g.at + d);
      }
    }
  }
  return make_breaks(a, b, std::move(features), max_width);
}

inline std::vector<GradePoint> grade_both(const std::vector<double>& pts) {
  std::vector<GradePoint> out;
  for (double x : pts) out.push_back({x, 0});
  return out;
}

}  // namespace emod
