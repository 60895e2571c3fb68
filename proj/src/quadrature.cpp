#include "isogeom/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>

namespace isogeom {

namespace {

// 15-point Kronrod abscissae/weights with the embedded 7-point Gauss rule
// (QUADPACK dqk15 constants).
constexpr double xgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr double wgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double wg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct PanelResult {
  double integral;
  double error;
};

PanelResult gk15(const std::function<double(double)>& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double halflen = 0.5 * (b - a);
  const double fc = f(center);
  double result_gauss = fc * wg[3];
  double result_kronrod = fc * wgk[7];
  for (int j = 0; j < 7; ++j) {
    const double dx = halflen * xgk[j];
    const double f1 = f(center - dx);
    const double f2 = f(center + dx);
    result_kronrod += wgk[j] * (f1 + f2);
    if (j % 2 == 1) result_gauss += wg[j / 2] * (f1 + f2);
  }
  result_kronrod *= halflen;
  result_gauss *= halflen;
  const double err = std::fabs(result_kronrod - result_gauss);
  return {result_kronrod, err};
}

struct Interval {
  double a, b, integral, error;
  bool operator<(const Interval& o) const { return error < o.error; }
};

double adaptive_core(const std::function<double(double)>& f,
                     std::span<const double> pts, double rel_tol,
                     double abs_tol, int max_intervals) {
  std::priority_queue<Interval> heap;
  double total = 0.0, total_err = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    if (pts[i] == pts[i + 1]) continue;
    auto r = gk15(f, pts[i], pts[i + 1]);
    heap.push({pts[i], pts[i + 1], r.integral, r.error});
    total += r.integral;
    total_err += r.error;
  }
  int used = static_cast<int>(heap.size());
  while (!heap.empty() &&
         total_err > std::max(rel_tol * std::fabs(total), abs_tol)) {
    if (used >= max_intervals)
      throw std::runtime_error("integrate_adaptive: did not converge");
    Interval worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (mid <= worst.a || mid >= worst.b) continue; // interval at resolution limit
    auto rl = gk15(f, worst.a, mid);
    auto rr = gk15(f, mid, worst.b);
    total += rl.integral + rr.integral - worst.integral;
    total_err += rl.error + rr.error - worst.error;
    heap.push({worst.a, mid, rl.integral, rl.error});
    heap.push({mid, worst.b, rr.integral, rr.error});
    ++used;
  }
  return total;
}

} // namespace

double integrate_adaptive(const std::function<double(double)>& f, double a,
                          double b, double rel_tol, double abs_tol,
                          int max_intervals) {
  const double pts[2] = {a, b};
  return adaptive_core(f, pts, rel_tol, abs_tol, max_intervals);
}

double integrate_adaptive_pts(const std::function<double(double)>& f,
                              std::span<const double> breakpoints,
                              double rel_tol, double abs_tol,
                              int max_intervals) {
  if (breakpoints.size() < 2)
    throw std::invalid_argument("integrate_adaptive_pts: need >= 2 points");
  std::vector<double> pts(breakpoints.begin(), breakpoints.end());
  std::sort(pts.begin(), pts.end());
  return adaptive_core(f, pts, rel_tol, abs_tol, max_intervals);
}

void gauss_legendre(int n, std::vector<double>& nodes,
                    std::vector<double>& weights) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    // Newton iteration from the Chebyshev-based initial guess.
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (x * p0 - p1) / (x * x - 1.0);
      const double dx = p0 / pp;
      x -= dx;
      if (std::fabs(dx) < 1e-15) break;
    }
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    const double w = 2.0 / ((1.0 - x * x) * pp * pp);
    weights[i] = w;
    weights[n - 1 - i] = w;
  }
}

} // namespace isogeom
