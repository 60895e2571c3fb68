#pragma once

// Per-sample numerical measurements: zero counts on the circle, marching
// squares nodal polylines and their lengths on the 2-manifolds, excursion
// volumes, two independent Leray estimators (epsilon-shell differencing vs
// coarea line integral), L^p / sup norms, and common-zero counts of pairs.
//
// Estimators are pure in (sample, parameters). The grids carry precomputed
// basis tables and are shared read-only between worker threads.

#include <optional>
#include <span>
#include <vector>

#include "isogeom/manifold.hpp"
#include "isogeom/sampling.hpp"

namespace isogeom {

// Basis values tabulated at a fixed point list.
struct BasisTable {
  const EigenspaceSpec* spec = nullptr;
  std::vector<double> values; // n_points x dim_e, row-major per point
  std::size_t n_points = 0;
  static BasisTable build(const EigenspaceSpec& spec,
                          std::span<const Point> points);
  void field(std::span<const double> coeffs, std::span<double> out) const;
};

struct QuadTable {
  QuadratureGrid grid;
  BasisTable table;
  QuadTable(const EigenspaceSpec& spec, int resolution);
};

// Node lattice on the chart of a 2-manifold. Torus: resolution x resolution
// cells, both directions wrap. Sphere: resolution cells in theta (poles are
// node rows) by 2*resolution cells in phi (wraps). Wrapped node values are
// copied, not re-evaluated, so seams are bit-consistent.
class MeshGrid {
public:
  MeshGrid(const EigenspaceSpec& spec, int resolution,
           double offset_cells = 0.0, bool with_table = true);
  const EigenspaceSpec* spec = nullptr;
  int rows = 0, cols = 0; // cell counts
  double da = 0.0, db = 0.0;
  double offset_cells = 0.0;
  Point node(int i, int j) const;
  void field(std::span<const double> coeffs, std::vector<double>& out) const;
  double covering_radius() const; // upper bound on dist(point, nearest node)
  bool has_table() const { return table_.has_value(); }

private:
  std::optional<BasisTable> table_;
};

struct LevelPolyline {
  struct Segment {
    Point p0, p1;
    double length; // geodesic
  };
  std::vector<Segment> segments;
  double total_length = 0.0;
};

enum class EstimatorMethod { MarchingSquares, SignScan, Quadrature, EpsShell, Coarea };

struct MeasureEstimate {
  double value = 0.0;
  int resolution = 0;
  EstimatorMethod method = EstimatorMethod::Quadrature;
  bool near_critical = false;
};

// Grids for one (spec, resolution) pair; build once, share across trials.
struct EstimatorContext {
  const EigenspaceSpec* spec = nullptr;
  int resolution = 0;
  int zeros_grid_n = 0; // circle sign-scan grid
  std::optional<QuadTable> quad;
  std::optional<MeshGrid> mesh; // m == 2 only
  EstimatorContext(const EigenspaceSpec& spec, int resolution);
};

// -- circle ---------------------------------------------------------------

// Sign-scan + bisection zero counter; t is the absolute level.
int count_zeros_circle(const PolynomialSample& u, double t, int grid_n);
// The refined crossing positions (used by the circle coarea estimator).
std::vector<double> circle_level_crossings(const PolynomialSample& u, double t,
                                           int grid_n);

// -- 2-manifolds ----------------------------------------------------------

LevelPolyline nodal_length_2d(const PolynomialSample& u, double t,
                              const MeshGrid& mesh);
LevelPolyline nodal_length_2d(const PolynomialSample& u, double t,
                              int resolution);

MeasureEstimate excursion_volume(const PolynomialSample& u, double t,
                                 const QuadTable& quad);
MeasureEstimate excursion_volume(const PolynomialSample& u, double t,
                                 int resolution);

// Optional sub-cell refinement: per-cell area fractions of {u >= t} from the
// linear interpolation (each cell split into four triangles around its
// center), with measure-true cell weights. Sharper for a single sample than
// node counting; the node-counting route stays the exactly-unbiased default.
MeasureEstimate excursion_volume_subcell(const PolynomialSample& u, double t,
                                         const MeshGrid& mesh);

MeasureEstimate leray_eps_shell(const PolynomialSample& u, double t,
                                double epsilon, const QuadTable& quad);
MeasureEstimate leray_eps_shell(const PolynomialSample& u, double t,
                                double epsilon, int resolution);

// m == 2 uses the nodal polyline; m == 1 sums 1/|u'| over the crossings.
MeasureEstimate leray_coarea(const PolynomialSample& u, double t,
                             const EstimatorContext& ctx);

// int_M |u|^a dp for a > -1; near-nodal quadrature nodes are handled by the
// first-order model |u| ~ |grad u| * dist when a < 0.
double integral_abs_power(const PolynomialSample& u, double a,
                          const EstimatorContext& ctx);
double lp_norm(const PolynomialSample& u, double a,
               const EstimatorContext& ctx); // a >= 1

struct SupEstimate {
  double grid_max = 0.0;
  double refined_max = 0.0;    // after local ascent from the best node
  double certified_upper = 0.0; // grid_max + kappa * covering radius
};
SupEstimate sup_norm(const PolynomialSample& u, const EstimatorContext& ctx);

int common_zero_count(const PolynomialSample& u1, const PolynomialSample& u2,
                      const MeshGrid& mesh);
int common_zero_count(const PolynomialSample& u1, const PolynomialSample& u2,
                      int resolution);
// General two-level variant (common points of L^{t1}_{u1} and L^{t2}_{u2}).
int common_level_count(const PolynomialSample& u1, double t1,
                       const PolynomialSample& u2, double t2,
                       const MeshGrid& mesh);

// CSV export (x0,y0,z0,x1,y1,z1 per segment).
void write_polyline_csv(const LevelPolyline& line, const ManifoldModel& model,
                        std::ostream& os);

} // namespace isogeom
