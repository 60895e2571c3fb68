#include "isogeom/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include "isogeom/quadrature.hpp"

namespace isogeom {

namespace {
constexpr double kTwoPi = 6.2831853071795864769;

double wrap_delta(double d) {
  d = std::fmod(std::fabs(d), kTwoPi);
  return d > M_PI ? kTwoPi - d : d;
}
} // namespace

const ManifoldModel& ManifoldModel::circle() {
  static const ManifoldModel m{ManifoldId::Circle, 1, kTwoPi, {0.31, 1.0}};
  return m;
}
const ManifoldModel& ManifoldModel::torus2() {
  static const ManifoldModel m{ManifoldId::Torus2, 2, kTwoPi * kTwoPi,
                               {0.079, 3.0}};
  return m;
}
const ManifoldModel& ManifoldModel::sphere2() {
  static const ManifoldModel m{ManifoldId::Sphere2, 2, 4.0 * M_PI,
                               {0.12, 1.5}};
  return m;
}

double ManifoldModel::distance(const Point& p, const Point& q) const {
  switch (id) {
    case ManifoldId::Circle:
      return wrap_delta(p.a - q.a);
    case ManifoldId::Torus2:
      return std::hypot(wrap_delta(p.a - q.a), wrap_delta(p.b - q.b));
    case ManifoldId::Sphere2: {
      const auto u = embed3(p);
      const auto v = embed3(q);
      const double dot = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
      const double cx = u[1] * v[2] - u[2] * v[1];
      const double cy = u[2] * v[0] - u[0] * v[2];
      const double cz = u[0] * v[1] - u[1] * v[0];
      return std::atan2(std::sqrt(cx * cx + cy * cy + cz * cz), dot);
    }
  }
  return 0.0;
}

double ManifoldModel::ball_volume(double r) const {
  switch (id) {
    case ManifoldId::Circle:
      return r >= M_PI ? kTwoPi : 2.0 * r;
    case ManifoldId::Torus2:
      // Euclidean disk below the injectivity radius pi; r0 stays below it.
      if (r > M_PI)
        throw std::domain_error("ball_volume: torus ball only below radius pi");
      return M_PI * r * r;
    case ManifoldId::Sphere2:
      return r >= M_PI ? 4.0 * M_PI : kTwoPi * (1.0 - std::cos(r));
  }
  return 0.0;
}

std::array<double, 3> ManifoldModel::embed3(const Point& p) const {
  switch (id) {
    case ManifoldId::Circle:
      return {std::cos(p.a), std::sin(p.a), 0.0};
    case ManifoldId::Torus2:
      return {p.a, p.b, 0.0};
    case ManifoldId::Sphere2: {
      const double st = std::sin(p.a);
      return {st * std::cos(p.b), st * std::sin(p.b), std::cos(p.a)};
    }
  }
  return {0, 0, 0};
}

std::string ManifoldModel::name() const {
  switch (id) {
    case ManifoldId::Circle: return "circle";
    case ManifoldId::Torus2: return "torus2";
    case ManifoldId::Sphere2: return "sphere2";
  }
  return "?";
}

namespace {

void finalize_derived(EigenspaceSpec& spec) {
  int dim = 0;
  double trace = 0.0; // sum_j dim_j * lambda_j = |Tr Delta| on E
  int offset = 0;
  for (auto& blk : spec.blocks) {
    blk.offset = offset;
    offset += blk.dim;
    dim += blk.dim;
    trace += blk.dim * blk.lambda;
  }
  if (dim < 2)
    throw std::invalid_argument("eigenspace: dim E must be > 1");
  spec.dim_e = dim;
  spec.d = dim - 1;
  spec.c = std::sqrt(static_cast<double>(dim));
  spec.s = std::sqrt(trace / (spec.manifold->m * dim));
  spec.kappa = spec.c * spec.s;
}

// Canonical representative of the pair {v, -v}.
std::array<int, 2> canon_pm(std::array<int, 2> v) {
  if (v[0] < 0 || (v[0] == 0 && v[1] < 0)) return {-v[0], -v[1]};
  return v;
}

std::vector<std::array<int, 2>> bc2_orbit(std::array<int, 2> g) {
  std::set<std::array<int, 2>> reps;
  const int a = g[0], b = g[1];
  for (int sa : {1, -1})
    for (int sb : {1, -1}) {
      reps.insert(canon_pm({sa * a, sb * b}));
      reps.insert(canon_pm({sa * b, sb * a}));
    }
  return {reps.begin(), reps.end()};
}

} // namespace

EigenspaceSpec make_circle_space(std::vector<int> spectrum) {
  if (spectrum.empty())
    throw std::invalid_argument("circle spectrum must be non-empty");
  std::sort(spectrum.begin(), spectrum.end());
  spectrum.erase(std::unique(spectrum.begin(), spectrum.end()), spectrum.end());
  if (spectrum.front() < 1)
    throw std::invalid_argument("circle frequencies must be >= 1");
  EigenspaceSpec spec;
  spec.manifold = &ManifoldModel::circle();
  for (int k : spectrum) {
    SpectralBlock blk;
    blk.lambda = static_cast<double>(k) * k;
    blk.dim = 2;
    blk.freqs = {{k, 0}};
    spec.blocks.push_back(std::move(blk));
  }
  finalize_derived(spec);
  return spec;
}

EigenspaceSpec make_torus_space(std::vector<std::array<int, 2>> generators) {
  if (generators.empty())
    throw std::invalid_argument("torus spectrum must be non-empty");
  EigenspaceSpec spec;
  spec.manifold = &ManifoldModel::torus2();
  std::set<std::array<int, 2>> seen;
  for (const auto& g : generators) {
    if (g[0] == 0 && g[1] == 0)
      throw std::invalid_argument("torus generator must be nonzero");
    auto orbit = bc2_orbit(g);
    if (seen.count(orbit.front())) continue; // orbit already present
    for (const auto& v : orbit) seen.insert(v);
    SpectralBlock blk;
    blk.lambda = static_cast<double>(g[0]) * g[0] + static_cast<double>(g[1]) * g[1];
    blk.dim = 2 * static_cast<int>(orbit.size());
    blk.freqs = std::move(orbit);
    spec.blocks.push_back(std::move(blk));
  }
  finalize_derived(spec);
  return spec;
}

EigenspaceSpec make_sphere_space(std::vector<int> degrees) {
  if (degrees.empty())
    throw std::invalid_argument("sphere degree list must be non-empty");
  std::sort(degrees.begin(), degrees.end());
  degrees.erase(std::unique(degrees.begin(), degrees.end()), degrees.end());
  if (degrees.front() < 1)
    throw std::invalid_argument(
        "sphere degrees must be >= 1 (degree 0 is the constant)");
  EigenspaceSpec spec;
  spec.manifold = &ManifoldModel::sphere2();
  for (int n : degrees) {
    SpectralBlock blk;
    blk.lambda = static_cast<double>(n) * (n + 1);
    blk.dim = 2 * n + 1;
    blk.degree = n;
    spec.blocks.push_back(std::move(blk));
  }
  finalize_derived(spec);
  return spec;
}

namespace {

// Normalized associated Legendre Pbar_n^m with int_{-1}^1 Pbar^2 dx = 2
// (Condon-Shortley phase omitted). Row-major triangular storage.
inline int tri_index(int n, int m) { return n * (n + 1) / 2 + m; }

void legendre_table(int nmax, double x, double st, std::vector<double>& p) {
  p.assign(tri_index(nmax, nmax) + 1, 0.0);
  p[0] = 1.0;
  for (int m = 1; m <= nmax; ++m)
    p[tri_index(m, m)] =
        st * std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * p[tri_index(m - 1, m - 1)];
  for (int m = 0; m < nmax; ++m)
    p[tri_index(m + 1, m)] = std::sqrt(2.0 * m + 3.0) * x * p[tri_index(m, m)];
  for (int m = 0; m <= nmax; ++m)
    for (int n = m + 2; n <= nmax; ++n) {
      const double a =
          std::sqrt((4.0 * n * n - 1.0) / (static_cast<double>(n) * n - m * m));
      const double b = std::sqrt(
          ((static_cast<double>(n - 1) * (n - 1) - m * m)) /
          (4.0 * static_cast<double>(n - 1) * (n - 1) - 1.0));
      p[tri_index(n, m)] =
          a * (x * p[tri_index(n - 1, m)] - b * p[tri_index(n - 2, m)]);
    }
}

// d/dtheta of Pbar_n^m given the value table; requires sin(theta) != 0.
double legendre_dtheta(const std::vector<double>& p, int n, int m, double x,
                       double st) {
  const double pn = p[tri_index(n, m)];
  const double pnm1 = (n - 1 >= m) ? p[tri_index(n - 1, m)] : 0.0;
  const double e = std::sqrt((2.0 * n + 1.0) * (static_cast<double>(n) - m) *
                             (static_cast<double>(n) + m) / (2.0 * n - 1.0));
  return -(e * pnm1 - n * x * pn) / st;
}

constexpr double kSqrt2 = 1.4142135623730950488;

} // namespace

void EigenspaceSpec::eval_basis(const Point& p, std::span<double> out) const {
  switch (manifold->id) {
    case ManifoldId::Circle: {
      std::size_t i = 0;
      for (const auto& blk : blocks) {
        const double kt = blk.freqs[0][0] * p.a;
        out[i++] = kSqrt2 * std::cos(kt);
        out[i++] = kSqrt2 * std::sin(kt);
      }
      return;
    }
    case ManifoldId::Torus2: {
      std::size_t i = 0;
      for (const auto& blk : blocks)
        for (const auto& k : blk.freqs) {
          const double arg = k[0] * p.a + k[1] * p.b;
          out[i++] = kSqrt2 * std::cos(arg);
          out[i++] = kSqrt2 * std::sin(arg);
        }
      return;
    }
    case ManifoldId::Sphere2: {
      const int nmax = blocks.back().degree;
      thread_local std::vector<double> plm;
      const double x = std::cos(p.a), st = std::sin(p.a);
      legendre_table(nmax, x, st, plm);
      std::size_t i = 0;
      for (const auto& blk : blocks) {
        const int n = blk.degree;
        out[i++] = plm[tri_index(n, 0)];
        for (int m = 1; m <= n; ++m) {
          const double v = kSqrt2 * plm[tri_index(n, m)];
          out[i++] = v * std::cos(m * p.b);
          out[i++] = v * std::sin(m * p.b);
        }
      }
      return;
    }
  }
}

void EigenspaceSpec::eval_basis_gradient(
    const Point& p, std::span<double> out_val,
    std::span<std::array<double, 2>> out_grad) const {
  switch (manifold->id) {
    case ManifoldId::Circle: {
      std::size_t i = 0;
      for (const auto& blk : blocks) {
        const int k = blk.freqs[0][0];
        const double ck = std::cos(k * p.a), sk = std::sin(k * p.a);
        out_val[i] = kSqrt2 * ck;
        out_grad[i++] = {-kSqrt2 * k * sk, 0.0};
        out_val[i] = kSqrt2 * sk;
        out_grad[i++] = {kSqrt2 * k * ck, 0.0};
      }
      return;
    }
    case ManifoldId::Torus2: {
      std::size_t i = 0;
      for (const auto& blk : blocks)
        for (const auto& k : blk.freqs) {
          const double arg = k[0] * p.a + k[1] * p.b;
          const double ca = std::cos(arg), sa = std::sin(arg);
          out_val[i] = kSqrt2 * ca;
          out_grad[i++] = {-kSqrt2 * k[0] * sa, -kSqrt2 * k[1] * sa};
          out_val[i] = kSqrt2 * sa;
          out_grad[i++] = {kSqrt2 * k[0] * ca, kSqrt2 * k[1] * ca};
        }
      return;
    }
    case ManifoldId::Sphere2: {
      const int nmax = blocks.back().degree;
      thread_local std::vector<double> plm;
      const double x = std::cos(p.a);
      // Clamp so pole calls degrade instead of producing NaN; gradients are
      // only meaningful away from the poles.
      const double st = std::max(std::sin(p.a), 1e-12);
      legendre_table(nmax, x, st, plm);
      std::size_t i = 0;
      for (const auto& blk : blocks) {
        const int n = blk.degree;
        {
          const double dp = legendre_dtheta(plm, n, 0, x, st);
          out_val[i] = plm[tri_index(n, 0)];
          out_grad[i++] = {dp, 0.0};
        }
        for (int m = 1; m <= n; ++m) {
          const double v = kSqrt2 * plm[tri_index(n, m)];
          const double dv = kSqrt2 * legendre_dtheta(plm, n, m, x, st);
          const double cm = std::cos(m * p.b), sm = std::sin(m * p.b);
          out_val[i] = v * cm;
          out_grad[i++] = {dv * cm, -v * m * sm / st};
          out_val[i] = v * sm;
          out_grad[i++] = {dv * sm, v * m * cm / st};
        }
      }
      return;
    }
  }
}

double EigenspaceSpec::max_lambda() const {
  double mx = 0.0;
  for (const auto& blk : blocks) mx = std::max(mx, blk.lambda);
  return mx;
}

std::string EigenspaceSpec::spectrum_string() const {
  std::ostringstream os;
  bool first = true;
  switch (manifold->id) {
    case ManifoldId::Circle:
      for (const auto& blk : blocks) {
        if (!first) os << ",";
        os << blk.freqs[0][0];
        first = false;
      }
      break;
    case ManifoldId::Torus2:
      for (const auto& blk : blocks)
        for (const auto& k : blk.freqs) {
          if (!first) os << ";";
          os << "(" << k[0] << "," << k[1] << ")";
          first = false;
        }
      break;
    case ManifoldId::Sphere2:
      for (const auto& blk : blocks) {
        if (!first) os << ",";
        os << blk.degree;
        first = false;
      }
      break;
  }
  return os.str();
}

QuadratureGrid quadrature_grid(const ManifoldModel& model, int resolution) {
  if (resolution < 8)
    throw std::invalid_argument("quadrature_grid: resolution must be >= 8");
  QuadratureGrid g;
  g.manifold = &model;
  g.resolution = resolution;
  switch (model.id) {
    case ManifoldId::Circle: {
      const int n = resolution;
      g.points.reserve(n);
      for (int i = 0; i < n; ++i)
        g.points.push_back({(i + 0.5) * kTwoPi / n, 0.0});
      g.weights.assign(n, 1.0 / n);
      break;
    }
    case ManifoldId::Torus2: {
      const int n = resolution;
      g.points.reserve(static_cast<std::size_t>(n) * n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          g.points.push_back({(i + 0.5) * kTwoPi / n, (j + 0.5) * kTwoPi / n});
      g.weights.assign(static_cast<std::size_t>(n) * n, 1.0 / (static_cast<double>(n) * n));
      break;
    }
    case ManifoldId::Sphere2: {
      const int nt = resolution;
      const int np = 2 * resolution;
      std::vector<double> xs, ws;
      gauss_legendre(nt, xs, ws);
      g.points.reserve(static_cast<std::size_t>(nt) * np);
      g.weights.reserve(static_cast<std::size_t>(nt) * np);
      for (int i = 0; i < nt; ++i) {
        const double theta = std::acos(xs[i]);
        const double w = 0.5 * ws[i] / np;
        for (int j = 0; j < np; ++j) {
          g.points.push_back({theta, (j + 0.5) * kTwoPi / np});
          g.weights.push_back(w);
        }
      }
      // renormalize so the weights are a probability measure to rounding
      double total = 0.0, comp = 0.0;
      for (double w : g.weights) { // Kahan
        const double y = w - comp;
        const double t = total + y;
        comp = (t - total) - y;
        total = t;
      }
      for (double& w : g.weights) w /= total;
      break;
    }
  }
  return g;
}

double kernel_diagonal_check(const EigenspaceSpec& spec,
                             std::span<const Point> points) {
  std::vector<double> vals(spec.dim_e);
  double worst = 0.0;
  for (const auto& p : points) {
    spec.eval_basis(p, vals);
    double sum = 0.0;
    for (double v : vals) sum += v * v;
    worst = std::max(worst, std::fabs(sum - spec.dim_e));
  }
  return worst;
}

} // namespace isogeom
