#include "isogeom/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace isogeom {

namespace {
constexpr double kTwoPi = 6.2831853071795864769;
constexpr double kNodeTol = 1e-13;     // node-on-level degeneracy trigger
constexpr double kGradFloor = 1e-10;   // near-critical gradient cutoff

double wrap_signed(double d) {
  d = std::fmod(d, kTwoPi);
  if (d > M_PI) d -= kTwoPi;
  if (d < -M_PI) d += kTwoPi;
  return d;
}
} // namespace

// ---- tables ---------------------------------------------------------------

BasisTable BasisTable::build(const EigenspaceSpec& spec,
                             std::span<const Point> points) {
  BasisTable t;
  t.spec = &spec;
  t.n_points = points.size();
  t.values.resize(points.size() * spec.dim_e);
  for (std::size_t p = 0; p < points.size(); ++p)
    spec.eval_basis(points[p],
                    std::span<double>(t.values.data() + p * spec.dim_e,
                                      spec.dim_e));
  return t;
}

void BasisTable::field(std::span<const double> coeffs,
                       std::span<double> out) const {
  const int dim = spec->dim_e;
  const double* v = values.data();
  for (std::size_t p = 0; p < n_points; ++p, v += dim) {
    double acc = 0.0;
    for (int i = 0; i < dim; ++i) acc += coeffs[i] * v[i];
    out[p] = acc;
  }
}

QuadTable::QuadTable(const EigenspaceSpec& spec, int resolution)
    : grid(quadrature_grid(*spec.manifold, resolution)),
      table(BasisTable::build(spec, grid.points)) {}

MeshGrid::MeshGrid(const EigenspaceSpec& spec, int resolution,
                   double offset_cells, bool with_table)
    : spec(&spec), offset_cells(offset_cells) {
  if (spec.manifold->m != 2)
    throw std::invalid_argument("MeshGrid: needs a 2-manifold");
  if (resolution < 8)
    throw std::invalid_argument("MeshGrid: resolution must be >= 8");
  rows = resolution;
  if (spec.manifold->id == ManifoldId::Torus2) {
    cols = resolution;
    da = kTwoPi / rows;
    db = kTwoPi / cols;
  } else { // sphere: theta in [0, pi], phi wraps
    cols = 2 * resolution;
    da = M_PI / rows;
    db = kTwoPi / cols;
  }
  if (with_table) {
    std::vector<Point> pts;
    pts.reserve(static_cast<std::size_t>(rows + 1) * (cols + 1));
    for (int i = 0; i <= rows; ++i)
      for (int j = 0; j <= cols; ++j) pts.push_back(node(i, j));
    table_ = BasisTable::build(spec, pts);
  }
}

Point MeshGrid::node(int i, int j) const {
  if (spec->manifold->id == ManifoldId::Torus2)
    return {(i + offset_cells) * da, (j + offset_cells) * db};
  return {i * da, (j + offset_cells) * db}; // poles stay pinned
}

void MeshGrid::field(std::span<const double> coeffs,
                     std::vector<double>& out) const {
  const std::size_t stride = cols + 1;
  out.resize(static_cast<std::size_t>(rows + 1) * stride);
  if (table_) {
    table_->field(coeffs, out);
  } else {
    thread_local std::vector<double> vals;
    vals.resize(spec->dim_e);
    for (int i = 0; i <= rows; ++i)
      for (int j = 0; j <= cols; ++j) {
        spec->eval_basis(node(i, j), vals);
        double acc = 0.0;
        for (int k = 0; k < spec->dim_e; ++k) acc += coeffs[k] * vals[k];
        out[i * stride + j] = acc;
      }
  }
  // enforce bit-exact wraparound seams
  for (int i = 0; i <= rows; ++i) out[i * stride + cols] = out[i * stride];
  if (spec->manifold->id == ManifoldId::Torus2)
    for (int j = 0; j <= cols; ++j) out[rows * stride + j] = out[j];
}

double MeshGrid::covering_radius() const {
  return 0.5 * std::hypot(da, db); // metric coefficients are <= 1
}

EstimatorContext::EstimatorContext(const EigenspaceSpec& spec, int resolution)
    : spec(&spec), resolution(resolution) {
  const int min_scan =
      8 * static_cast<int>(std::ceil(std::sqrt(spec.max_lambda())));
  zeros_grid_n = std::max(resolution, min_scan);
  quad.emplace(spec, resolution);
  if (spec.manifold->m == 2) mesh.emplace(spec, resolution);
}

// ---- circle ---------------------------------------------------------------

namespace {

std::vector<double> circle_crossings_impl(const PolynomialSample& u, double t,
                                          int grid_n, double offset) {
  const double h = kTwoPi / grid_n;
  thread_local std::vector<double> vals;
  vals.resize(grid_n);
  for (int i = 0; i < grid_n; ++i)
    vals[i] = u.evaluate({offset + i * h, 0.0}) - t;
  if (offset == 0.0)
    for (int i = 0; i < grid_n; ++i)
      if (std::fabs(vals[i]) < kNodeTol)
        return circle_crossings_impl(u, t, grid_n, 0.5 * h); // half-step shift
  std::vector<double> zeros;
  for (int i = 0; i < grid_n; ++i) {
    const double va = vals[i];
    const double vb = vals[(i + 1) % grid_n];
    if ((va > 0.0) == (vb > 0.0)) continue;
    double lo = offset + i * h, hi = lo + h;
    double flo = va;
    while (hi - lo > 1e-12) {
      const double mid = 0.5 * (lo + hi);
      const double fm = u.evaluate({mid, 0.0}) - t;
      if ((fm > 0.0) == (flo > 0.0)) {
        lo = mid;
        flo = fm;
      } else {
        hi = mid;
      }
    }
    zeros.push_back(std::fmod(0.5 * (lo + hi), kTwoPi));
  }
  return zeros;
}

} // namespace

std::vector<double> circle_level_crossings(const PolynomialSample& u, double t,
                                           int grid_n) {
  if (u.spec->manifold->id != ManifoldId::Circle)
    throw std::invalid_argument("circle_level_crossings: circle only");
  const int min_scan =
      8 * static_cast<int>(std::ceil(std::sqrt(u.spec->max_lambda())));
  if (grid_n < min_scan)
    throw std::invalid_argument("circle scan: grid_n below 8 per max frequency");
  return circle_crossings_impl(u, t, grid_n, 0.0);
}

int count_zeros_circle(const PolynomialSample& u, double t, int grid_n) {
  return static_cast<int>(circle_level_crossings(u, t, grid_n).size());
}

// ---- marching squares ------------------------------------------------------

namespace {

struct ParamSeg {
  double ax, ay, bx, by;
};

// Interpolated crossing on the edge from (xa,ya,va) to (xb,yb,vb).
inline void edge_point(double xa, double ya, double va, double xb, double yb,
                       double vb, double t, double& px, double& py) {
  const double s = (t - va) / (vb - va);
  px = xa + s * (xb - xa);
  py = ya + s * (yb - ya);
}

// Corners cyclic: c0=(a0,b0) c1=(a1,b0) c2=(a1,b1) c3=(a0,b1).
// Returns 0..2 segments; `center` is called only for the two saddle cases.
template <class CenterFn>
int cell_segments(double a0, double b0, double a1, double b1,
                  const double v[4], double t, CenterFn&& center,
                  ParamSeg out[2]) {
  const int code = (v[0] >= t ? 1 : 0) | (v[1] >= t ? 2 : 0) |
                   (v[2] >= t ? 4 : 0) | (v[3] >= t ? 8 : 0);
  if (code == 0 || code == 15) return 0;
  double e[4][2]; // crossing point per edge, filled on demand
  auto fill = [&](int edge) {
    switch (edge) {
      case 0: edge_point(a0, b0, v[0], a1, b0, v[1], t, e[0][0], e[0][1]); break;
      case 1: edge_point(a1, b0, v[1], a1, b1, v[2], t, e[1][0], e[1][1]); break;
      case 2: edge_point(a1, b1, v[2], a0, b1, v[3], t, e[2][0], e[2][1]); break;
      case 3: edge_point(a0, b1, v[3], a0, b0, v[0], t, e[3][0], e[3][1]); break;
    }
  };
  auto emit = [&](int i, int ea, int eb) {
    fill(ea);
    fill(eb);
    out[i] = {e[ea][0], e[ea][1], e[eb][0], e[eb][1]};
  };
  switch (code) {
    case 1: case 14: emit(0, 3, 0); return 1;
    case 2: case 13: emit(0, 0, 1); return 1;
    case 4: case 11: emit(0, 1, 2); return 1;
    case 8: case 7:  emit(0, 2, 3); return 1;
    case 3: case 12: emit(0, 3, 1); return 1;
    case 6: case 9:  emit(0, 0, 2); return 1;
    case 5:
      if (center() >= t) { emit(0, 0, 1); emit(1, 2, 3); }
      else { emit(0, 3, 0); emit(1, 1, 2); }
      return 2;
    case 10:
      if (center() >= t) { emit(0, 3, 0); emit(1, 1, 2); }
      else { emit(0, 0, 1); emit(1, 2, 3); }
      return 2;
  }
  return 0;
}

double segment_geodesic_length(const ManifoldModel& model, const ParamSeg& s) {
  if (model.id == ManifoldId::Torus2)
    return std::hypot(s.bx - s.ax, s.by - s.ay);
  return model.distance({s.ax, s.ay}, {s.bx, s.by});
}

bool has_degenerate_node(const std::vector<double>& f, double t) {
  for (double v : f)
    if (std::fabs(v - t) < kNodeTol) return true;
  return false;
}

// Walks all cells, invoking emit(ParamSeg) for every extracted segment.
template <class Emit>
void march_all_cells(const MeshGrid& mesh, const std::vector<double>& f,
                     double t, const PolynomialSample& u, Emit&& emit_fn) {
  const std::size_t stride = mesh.cols + 1;
  ParamSeg segs[2];
  for (int i = 0; i < mesh.rows; ++i) {
    const Point pa = mesh.node(i, 0);
    const Point pb = mesh.node(i + 1, 0);
    for (int j = 0; j < mesh.cols; ++j) {
      const double v[4] = {f[i * stride + j], f[(i + 1) * stride + j],
                           f[(i + 1) * stride + j + 1], f[i * stride + j + 1]};
      // cheap reject
      if ((v[0] >= t && v[1] >= t && v[2] >= t && v[3] >= t) ||
          (v[0] < t && v[1] < t && v[2] < t && v[3] < t))
        continue;
      const double b0 = mesh.node(i, j).b;
      const double b1 = b0 + mesh.db;
      auto center = [&] {
        return u.evaluate({0.5 * (pa.a + pb.a), 0.5 * (b0 + b1)});
      };
      const int n = cell_segments(pa.a, b0, pb.a, b1, v, t, center, segs);
      for (int k = 0; k < n; ++k) emit_fn(segs[k]);
    }
  }
}

LevelPolyline extract_polyline(const MeshGrid& mesh,
                               const std::vector<double>& f, double t,
                               const PolynomialSample& u) {
  LevelPolyline line;
  march_all_cells(mesh, f, t, u, [&](const ParamSeg& s) {
    const double len = segment_geodesic_length(*mesh.spec->manifold, s);
    line.segments.push_back({{s.ax, s.ay}, {s.bx, s.by}, len});
    line.total_length += len;
  });
  return line;
}

// Field on the mesh with automatic half-cell shift when a node sits on the
// level (measure-zero event under continuous sampling laws). Symmetric
// samples can make the degeneracy persistent (e.g. zonal harmonics vanish on
// a whole theta row, and phi shifts cannot move it); the >= t corner
// convention classifies such nodes consistently, so after failed shifts the
// walk proceeds on the original grid.
const MeshGrid& field_with_degeneracy_guard(const PolynomialSample& u, double t,
                                            const MeshGrid& mesh,
                                            std::vector<double>& f,
                                            std::optional<MeshGrid>& shifted) {
  mesh.field(u.coeffs, f);
  if (!has_degenerate_node(f, t)) return mesh;
  for (double off : {0.5, 0.31, 0.17}) {
    shifted.emplace(*mesh.spec, mesh.rows, mesh.offset_cells + off, false);
    shifted->field(u.coeffs, f);
    if (!has_degenerate_node(f, t)) return *shifted;
  }
  shifted.reset();
  mesh.field(u.coeffs, f);
  return mesh;
}

void check_wavelength(const MeshGrid& mesh) {
  // at least 4 cells per shortest eigenfunction wavelength 2 pi / sqrt(lambda)
  const double wavelength = kTwoPi / std::sqrt(mesh.spec->max_lambda());
  const double cell = std::max(mesh.da, mesh.db);
  if (wavelength / cell < 4.0)
    throw std::invalid_argument(
        "nodal_length_2d: resolution below 4 cells per wavelength");
}

} // namespace

LevelPolyline nodal_length_2d(const PolynomialSample& u, double t,
                              const MeshGrid& mesh) {
  check_wavelength(mesh);
  thread_local std::vector<double> f;
  std::optional<MeshGrid> shifted;
  const MeshGrid& use = field_with_degeneracy_guard(u, t, mesh, f, shifted);
  return extract_polyline(use, f, t, u);
}

LevelPolyline nodal_length_2d(const PolynomialSample& u, double t,
                              int resolution) {
  MeshGrid mesh(*u.spec, resolution);
  return nodal_length_2d(u, t, mesh);
}

MeasureEstimate excursion_volume(const PolynomialSample& u, double t,
                                 const QuadTable& quad) {
  thread_local std::vector<double> f;
  f.resize(quad.grid.points.size());
  quad.table.field(u.coeffs, f);
  double frac = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (f[i] >= t) frac += quad.grid.weights[i];
  return {u.spec->manifold->total_volume * frac, quad.grid.resolution,
          EstimatorMethod::Quadrature, false};
}

MeasureEstimate excursion_volume(const PolynomialSample& u, double t,
                                 int resolution) {
  QuadTable quad(*u.spec, resolution);
  return excursion_volume(u, t, quad);
}

namespace {

// fraction of {linear >= 0} in a triangle from its vertex values
double triangle_fraction(double v0, double v1, double v2) {
  const bool p0 = v0 >= 0.0, p1 = v1 >= 0.0, p2 = v2 >= 0.0;
  const int k = (p0 ? 1 : 0) + (p1 ? 1 : 0) + (p2 ? 1 : 0);
  if (k == 3) return 1.0;
  if (k == 0) return 0.0;
  if (k == 1) {
    double a = v0, b = v1, c = v2;
    if (p1) { a = v1; b = v2; c = v0; }
    if (p2) { a = v2; b = v0; c = v1; }
    return (a / (a - b)) * (a / (a - c));
  }
  double a = v0, b = v1, c = v2; // k == 2: a is the negative vertex
  if (!p1) { a = v1; b = v2; c = v0; }
  if (!p2) { a = v2; b = v0; c = v1; }
  return 1.0 - (a / (a - b)) * (a / (a - c));
}

} // namespace

MeasureEstimate excursion_volume_subcell(const PolynomialSample& u, double t,
                                         const MeshGrid& mesh) {
  thread_local std::vector<double> f;
  std::optional<MeshGrid> shifted;
  const MeshGrid& use = field_with_degeneracy_guard(u, t, mesh, f, shifted);
  const std::size_t stride = use.cols + 1;
  const bool sphere = u.spec->manifold->id == ManifoldId::Sphere2;
  double acc = 0.0;
  for (int i = 0; i < use.rows; ++i) {
    const double a0 = use.node(i, 0).a;
    const double a1 = use.node(i + 1, 0).a;
    // exact h^m of one cell (constant per row)
    const double cell_measure =
        sphere ? use.db * (std::cos(a0) - std::cos(a1)) : use.da * use.db;
    for (int j = 0; j < use.cols; ++j) {
      const double v[4] = {f[i * stride + j] - t, f[(i + 1) * stride + j] - t,
                           f[(i + 1) * stride + j + 1] - t,
                           f[i * stride + j + 1] - t};
      double frac;
      if (v[0] >= 0 && v[1] >= 0 && v[2] >= 0 && v[3] >= 0) {
        frac = 1.0;
      } else if (v[0] < 0 && v[1] < 0 && v[2] < 0 && v[3] < 0) {
        frac = 0.0;
      } else {
        // triangulate around the center value; linear per triangle, so the
        // saddle ambiguity resolves itself
        const double b0 = use.node(i, j).b;
        const double vc =
            u.evaluate({0.5 * (a0 + a1), b0 + 0.5 * use.db}) - t;
        frac = 0.25 * (triangle_fraction(v[0], v[1], vc) +
                       triangle_fraction(v[1], v[2], vc) +
                       triangle_fraction(v[2], v[3], vc) +
                       triangle_fraction(v[3], v[0], vc));
      }
      acc += frac * cell_measure;
    }
  }
  return {acc, use.rows, EstimatorMethod::MarchingSquares, false};
}

MeasureEstimate leray_eps_shell(const PolynomialSample& u, double t,
                                double epsilon, const QuadTable& quad) {
  if (!(epsilon > 0.0))
    throw std::domain_error("leray_eps_shell: epsilon must be > 0");
  thread_local std::vector<double> f;
  f.resize(quad.grid.points.size());
  quad.table.field(u.coeffs, f);
  // (h^m(U^{t-eps}) - h^m(U^{t+eps})) / (2 eps); O(eps^2) bias away from
  // critical levels.
  double frac = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (f[i] >= t - epsilon && f[i] < t + epsilon) frac += quad.grid.weights[i];
  return {u.spec->manifold->total_volume * frac / (2.0 * epsilon),
          quad.grid.resolution, EstimatorMethod::EpsShell, false};
}

MeasureEstimate leray_eps_shell(const PolynomialSample& u, double t,
                                double epsilon, int resolution) {
  QuadTable quad(*u.spec, resolution);
  return leray_eps_shell(u, t, epsilon, quad);
}

MeasureEstimate leray_coarea(const PolynomialSample& u, double t,
                             const EstimatorContext& ctx) {
  MeasureEstimate est;
  est.method = EstimatorMethod::Coarea;
  est.resolution = ctx.resolution;
  std::array<double, 2> grad;
  if (u.spec->manifold->m == 1) {
    const auto zeros = circle_level_crossings(u, t, ctx.zeros_grid_n);
    double sum = 0.0;
    for (double z : zeros) {
      u.evaluate_with_gradient({z, 0.0}, grad);
      double g = std::fabs(grad[0]);
      if (g < kGradFloor) {
        est.near_critical = true;
        g = kGradFloor;
      }
      sum += 1.0 / g;
    }
    est.value = sum;
    return est;
  }
  thread_local std::vector<double> f;
  std::optional<MeshGrid> shifted;
  const MeshGrid& mesh =
      field_with_degeneracy_guard(u, t, *ctx.mesh, f, shifted);
  double sum = 0.0;
  march_all_cells(mesh, f, t, u, [&](const ParamSeg& s) {
    const double len = segment_geodesic_length(*u.spec->manifold, s);
    if (len <= 0.0) return;
    Point mid{0.5 * (s.ax + s.bx), 0.5 * (s.ay + s.by)};
    if (u.spec->manifold->id == ManifoldId::Sphere2)
      mid.a = std::clamp(mid.a, 1e-9, M_PI - 1e-9);
    u.evaluate_with_gradient(mid, grad);
    double g = std::hypot(grad[0], grad[1]);
    if (g < kGradFloor) {
      est.near_critical = true;
      g = kGradFloor;
    }
    sum += len / g;
  });
  est.value = sum;
  return est;
}

// ---- norms -----------------------------------------------------------------

namespace {

// Approximate chart distance from p to segment s, wrap-aware, with the
// longitude axis scaled by sin(theta) on the sphere.
double param_point_seg_dist(const ManifoldModel& model, const Point& p,
                            const ParamSeg& s) {
  double scale_b = 1.0;
  if (model.id == ManifoldId::Sphere2) scale_b = std::max(std::sin(p.a), 1e-6);
  double ax = s.ax - p.a, bx = s.bx - p.a;
  if (model.id == ManifoldId::Torus2) {
    ax = wrap_signed(ax);
    bx = ax + (s.bx - s.ax); // keep the segment contiguous
  }
  double ay = wrap_signed(s.ay - p.b);
  double by = ay + (s.by - s.ay);
  const double axs = ax, ays = ay * scale_b, bxs = bx, bys = by * scale_b;
  const double dx = bxs - axs, dy = bys - ays;
  const double len2 = dx * dx + dy * dy;
  double tproj = 0.0;
  if (len2 > 0.0) tproj = std::clamp(-(axs * dx + ays * dy) / len2, 0.0, 1.0);
  const double cx = axs + tproj * dx, cy = ays + tproj * dy;
  return std::hypot(cx, cy);
}

} // namespace

double integral_abs_power(const PolynomialSample& u, double a,
                          const EstimatorContext& ctx) {
  if (!(a > -1.0))
    throw std::domain_error("integral_abs_power: a must be > -1");
  const QuadTable& quad = *ctx.quad;
  thread_local std::vector<double> f;
  f.resize(quad.grid.points.size());
  quad.table.field(u.coeffs, f);
  if (a >= 0.0) {
    double sum = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i)
      sum += quad.grid.weights[i] * std::pow(std::fabs(f[i]), a);
    return sum;
  }
  // a in (-1, 0): nodes within delta of the nodal set integrate the local
  // 1-D model |u| ~ |grad u| * dist, which averages to g^a delta^a / (a+1)
  // across the strip.
  const double delta = 2.0 / ctx.resolution;
  // |u(p)| <= kappa |coeffs| dist(p, nodal set)
  const double near_band = u.spec->kappa * std::max(u.norm, 1e-300) * delta;
  std::vector<ParamSeg> segs;
  std::vector<double> zeros;
  if (u.spec->manifold->m == 1) {
    zeros = circle_level_crossings(u, 0.0, ctx.zeros_grid_n);
  } else {
    thread_local std::vector<double> mf;
    std::optional<MeshGrid> shifted;
    const MeshGrid& mesh =
        field_with_degeneracy_guard(u, 0.0, *ctx.mesh, mf, shifted);
    march_all_cells(mesh, mf, 0.0, u,
                    [&](const ParamSeg& s) { segs.push_back(s); });
  }
  std::array<double, 2> grad;
  double sum = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double w = quad.grid.weights[i];
    const double av = std::fabs(f[i]);
    bool near = false;
    if (av < near_band) {
      const Point& p = quad.grid.points[i];
      double dist = std::numeric_limits<double>::infinity();
      if (u.spec->manifold->m == 1) {
        for (double z : zeros)
          dist = std::min(dist, u.spec->manifold->distance(p, {z, 0.0}));
      } else {
        for (const auto& s : segs)
          dist = std::min(dist,
                          param_point_seg_dist(*u.spec->manifold, p, s));
      }
      if (dist < delta) {
        near = true;
        u.evaluate_with_gradient(p, grad);
        const double g =
            std::max(std::hypot(grad[0], grad[1]), kGradFloor);
        sum += w * std::pow(g, a) * std::pow(delta, a) / (a + 1.0);
      }
    }
    if (!near) sum += w * std::pow(av, a);
  }
  return sum;
}

double lp_norm(const PolynomialSample& u, double a,
               const EstimatorContext& ctx) {
  if (!(a >= 1.0)) throw std::domain_error("lp_norm: a must be >= 1");
  return std::pow(integral_abs_power(u, a, ctx), 1.0 / a);
}

SupEstimate sup_norm(const PolynomialSample& u, const EstimatorContext& ctx) {
  SupEstimate est;
  const ManifoldModel& model = *u.spec->manifold;
  Point best{0.0, 0.0};
  double cover = 0.0;
  if (model.m == 1) {
    const auto& grid = ctx.quad->grid;
    thread_local std::vector<double> f;
    f.resize(grid.points.size());
    ctx.quad->table.field(u.coeffs, f);
    for (std::size_t i = 0; i < f.size(); ++i)
      if (std::fabs(f[i]) > est.grid_max) {
        est.grid_max = std::fabs(f[i]);
        best = grid.points[i];
      }
    cover = M_PI / static_cast<double>(grid.points.size());
  } else {
    const MeshGrid& mesh = *ctx.mesh;
    thread_local std::vector<double> f;
    mesh.field(u.coeffs, f);
    const std::size_t stride = mesh.cols + 1;
    for (int i = 0; i <= mesh.rows; ++i)
      for (int j = 0; j < mesh.cols; ++j) {
        const double av = std::fabs(f[i * stride + j]);
        if (av > est.grid_max) {
          est.grid_max = av;
          best = mesh.node(i, j);
        }
      }
    cover = mesh.covering_radius();
  }
  // local ascent on |u| by a shrinking pattern search from the best node
  double sa = (model.m == 1 ? cover : 0.6 * cover), sb = sa;
  double val = est.grid_max;
  for (int iter = 0; iter < 70 && sa > 1e-11; ++iter) {
    Point trial = best;
    double tv = val;
    for (int di = -1; di <= 1; ++di)
      for (int dj = -1; dj <= 1; ++dj) {
        if (di == 0 && dj == 0) continue;
        if (model.m == 1 && dj != 0) continue;
        Point q{best.a + di * sa, best.b + dj * sb};
        if (model.id == ManifoldId::Sphere2)
          q.a = std::clamp(q.a, 0.0, M_PI);
        const double v = std::fabs(u.evaluate(q));
        if (v > tv) {
          tv = v;
          trial = q;
        }
      }
    if (tv > val) {
      val = tv;
      best = trial;
    } else {
      sa *= 0.5;
      sb *= 0.5;
    }
  }
  est.refined_max = val;
  est.certified_upper = est.grid_max + u.spec->kappa * u.norm * cover;
  return est;
}

// ---- common zeros ----------------------------------------------------------

namespace {

constexpr double kTangentSin = 1e-3;

struct CellEval {
  const PolynomialSample* u;
  double t;
  double operator()(double a, double b) const {
    return u->evaluate({a, b});
  }
};

// Counts transversal crossings of the two linearly interpolated level sets
// inside the cell; recurses on actual field values when a segment pair is
// closer than kTangentSin to tangency.
int crossings_in_cell(const PolynomialSample& u1, double t1,
                      const PolynomialSample& u2, double t2, double a0,
                      double b0, double a1, double b1, const double v1[4],
                      const double v2[4], int depth) {
  ParamSeg s1[2], s2[2];
  auto center1 = [&] { return u1.evaluate({0.5 * (a0 + a1), 0.5 * (b0 + b1)}); };
  auto center2 = [&] { return u2.evaluate({0.5 * (a0 + a1), 0.5 * (b0 + b1)}); };
  const int n1 = cell_segments(a0, b0, a1, b1, v1, t1, center1, s1);
  if (n1 == 0) return 0;
  const int n2 = cell_segments(a0, b0, a1, b1, v2, t2, center2, s2);
  if (n2 == 0) return 0;

  bool tangential = false;
  int count = 0;
  for (int i = 0; i < n1 && !tangential; ++i)
    for (int j = 0; j < n2 && !tangential; ++j) {
      const double rx = s1[i].bx - s1[i].ax, ry = s1[i].by - s1[i].ay;
      const double qx = s2[j].bx - s2[j].ax, qy = s2[j].by - s2[j].ay;
      const double denom = rx * qy - ry * qx;
      const double norms = std::hypot(rx, ry) * std::hypot(qx, qy);
      if (norms <= 0.0) continue;
      if (std::fabs(denom) < kTangentSin * norms) {
        tangential = true;
        break;
      }
      const double dx = s2[j].ax - s1[i].ax, dy = s2[j].ay - s1[i].ay;
      const double tt = (dx * qy - dy * qx) / denom;
      const double ww = (dx * ry - dy * rx) / denom;
      if (tt >= 0.0 && tt < 1.0 && ww >= 0.0 && ww < 1.0) ++count;
    }
  if (!tangential || depth >= 12) return count;

  // refine: subdivide on real field values
  const double am = 0.5 * (a0 + a1), bm = 0.5 * (b0 + b1);
  auto sub = [&](const PolynomialSample& u, const double v[4], double w[3][3]) {
    w[0][0] = v[0]; w[2][0] = v[1]; w[2][2] = v[2]; w[0][2] = v[3];
    w[1][0] = u.evaluate({am, b0});
    w[2][1] = u.evaluate({a1, bm});
    w[1][2] = u.evaluate({am, b1});
    w[0][1] = u.evaluate({a0, bm});
    w[1][1] = u.evaluate({am, bm});
  };
  double w1[3][3], w2[3][3];
  sub(u1, v1, w1);
  sub(u2, v2, w2);
  int total = 0;
  const double as[3] = {a0, am, a1}, bs[3] = {b0, bm, b1};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const double sv1[4] = {w1[i][j], w1[i + 1][j], w1[i + 1][j + 1],
                             w1[i][j + 1]};
      const double sv2[4] = {w2[i][j], w2[i + 1][j], w2[i + 1][j + 1],
                             w2[i][j + 1]};
      total += crossings_in_cell(u1, t1, u2, t2, as[i], bs[j], as[i + 1],
                                 bs[j + 1], sv1, sv2, depth + 1);
    }
  return total;
}

} // namespace

int common_level_count(const PolynomialSample& u1, double t1,
                       const PolynomialSample& u2, double t2,
                       const MeshGrid& mesh) {
  if (u1.spec->manifold != u2.spec->manifold)
    throw std::invalid_argument("common zeros: samples on different manifolds");
  if (u1.spec->manifold->m != 2)
    throw std::invalid_argument("common zeros: needs a 2-manifold");
  thread_local std::vector<double> f1, f2;
  std::optional<MeshGrid> shifted;
  const MeshGrid* use = &mesh;
  mesh.field(u1.coeffs, f1);
  mesh.field(u2.coeffs, f2);
  if (has_degenerate_node(f1, t1) || has_degenerate_node(f2, t2)) {
    use = nullptr;
    for (double off : {0.5, 0.31, 0.17}) {
      shifted.emplace(*mesh.spec, mesh.rows, mesh.offset_cells + off, false);
      shifted->field(u1.coeffs, f1);
      shifted->field(u2.coeffs, f2);
      if (!has_degenerate_node(f1, t1) && !has_degenerate_node(f2, t2)) {
        use = &*shifted;
        break;
      }
    }
    if (!use) { // persistent (symmetric sample): proceed on the base grid
      shifted.reset();
      mesh.field(u1.coeffs, f1);
      mesh.field(u2.coeffs, f2);
      use = &mesh;
    }
  }
  const std::size_t stride = use->cols + 1;
  int count = 0;
  for (int i = 0; i < use->rows; ++i) {
    const double a0 = use->node(i, 0).a;
    const double a1 = use->node(i + 1, 0).a;
    for (int j = 0; j < use->cols; ++j) {
      const double v1[4] = {f1[i * stride + j], f1[(i + 1) * stride + j],
                            f1[(i + 1) * stride + j + 1],
                            f1[i * stride + j + 1]};
      if ((v1[0] >= t1 && v1[1] >= t1 && v1[2] >= t1 && v1[3] >= t1) ||
          (v1[0] < t1 && v1[1] < t1 && v1[2] < t1 && v1[3] < t1))
        continue;
      const double v2[4] = {f2[i * stride + j], f2[(i + 1) * stride + j],
                            f2[(i + 1) * stride + j + 1],
                            f2[i * stride + j + 1]};
      if ((v2[0] >= t2 && v2[1] >= t2 && v2[2] >= t2 && v2[3] >= t2) ||
          (v2[0] < t2 && v2[1] < t2 && v2[2] < t2 && v2[3] < t2))
        continue;
      const double b0 = use->node(i, j).b;
      count += crossings_in_cell(u1, t1, u2, t2, a0, b0, a1, b0 + use->db, v1,
                                 v2, 0);
    }
  }
  return count;
}

int common_zero_count(const PolynomialSample& u1, const PolynomialSample& u2,
                      const MeshGrid& mesh) {
  return common_level_count(u1, 0.0, u2, 0.0, mesh);
}

int common_zero_count(const PolynomialSample& u1, const PolynomialSample& u2,
                      int resolution) {
  MeshGrid mesh(*u1.spec, resolution);
  return common_zero_count(u1, u2, mesh);
}

void write_polyline_csv(const LevelPolyline& line, const ManifoldModel& model,
                        std::ostream& os) {
  os << "x0,y0,z0,x1,y1,z1\n";
  char buf[160];
  for (const auto& seg : line.segments) {
    const auto p = model.embed3(seg.p0);
    const auto q = model.embed3(seg.p1);
    std::snprintf(buf, sizeof(buf), "%.12g,%.12g,%.12g,%.12g,%.12g,%.12g\n",
                  p[0], p[1], p[2], q[0], q[1], q[2]);
    os << buf;
  }
}

} // namespace isogeom
