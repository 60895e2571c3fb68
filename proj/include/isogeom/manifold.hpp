#pragma once

// Concrete models of the three supported homogeneous manifolds (circle,
// flat 2-torus with period 2 pi, round 2-sphere) together with orthonormal
// eigenfunction bases and probability-measure quadrature grids.
//
// An EigenspaceSpec is an invariant subspace described block-by-block; each
// block is a full orbit family with one Laplace eigenvalue. The derived
// quantities follow the trace identity s^2 = sum_j alpha_j lambda_j / m
// with alpha_j = dim_j / dim_E, and c = sqrt(dim_E), kappa = c * s.

#include <array>
#include <span>
#include <string>
#include <vector>

namespace isogeom {

enum class ManifoldId { Circle, Torus2, Sphere2 };

// Chart coordinates. Circle: (theta, unused). Torus2: (x, y), both mod 2 pi.
// Sphere2: (theta, phi) colatitude/longitude.
struct Point {
  double a = 0.0;
  double b = 0.0;
};

// Constants (b, r0) with h^m(B(p,r)) > b * varpi * r^m for r in (0, r0).
struct BallConstants {
  double b;
  double r0;
};

struct ManifoldModel {
  ManifoldId id;
  int m;               // intrinsic dimension
  double total_volume; // varpi = h^m(M)
  BallConstants ball;

  static const ManifoldModel& circle();
  static const ManifoldModel& torus2();
  static const ManifoldModel& sphere2();

  double distance(const Point& p, const Point& q) const; // geodesic
  double ball_volume(double r) const;                    // h^m(B(p, r))
  std::array<double, 3> embed3(const Point& p) const;    // for export/plots
  std::string name() const;
};

// One irreducible family: all basis functions sharing an eigenvalue that
// were generated together (a circle frequency, a BC2 orbit, or a spherical
// harmonic degree).
struct SpectralBlock {
  double lambda = 0.0; // eigenvalue of -Laplacian, > 0
  int dim = 0;         // block dimension
  int offset = 0;      // index of the block's first basis function
  // circle: {k,0} per frequency; torus: one entry per +-identified orbit
  // member, each contributing a (cos, sin) pair
  std::vector<std::array<int, 2>> freqs;
  int degree = 0; // sphere
};

class EigenspaceSpec {
public:
  const ManifoldModel* manifold = nullptr;
  std::vector<SpectralBlock> blocks;
  int dim_e = 0; // dim E
  int d = 0;     // dim E - 1
  double c = 0;  // sqrt(dim E)
  double s = 0;  // local homothety factor of the coherent-state immersion
  double kappa = 0; // c * s, the sharp Lipschitz constant on the unit sphere

  void eval_basis(const Point& p, std::span<double> out) const;
  // Gradients in an orthonormal tangent frame: circle (d/dtheta, 0),
  // torus (d/dx, d/dy), sphere (d/dtheta, (1/sin theta) d/dphi).
  void eval_basis_gradient(const Point& p, std::span<double> out_val,
                           std::span<std::array<double, 2>> out_grad) const;
  double max_lambda() const;
  std::string spectrum_string() const;
};

// spectrum: set of frequencies k >= 1; basis sqrt(2) cos k t, sqrt(2) sin k t.
EigenspaceSpec make_circle_space(std::vector<int> spectrum);
// generators: nonzero integer 2-vectors; each is closed into its full orbit
// under coordinate swaps and sign changes before building the block.
EigenspaceSpec make_torus_space(std::vector<std::array<int, 2>> generators);
// degrees: spherical-harmonic degrees n >= 1 (block dimension 2n + 1).
EigenspaceSpec make_sphere_space(std::vector<int> degrees);

// Probability-measure quadrature: weights sum to 1. Circle/torus use uniform
// (trigonometrically exact) grids; the sphere uses Gauss-Legendre nodes in
// cos(theta) times a uniform longitude grid, exact for harmonic products up
// to degree about `resolution`.
struct QuadratureGrid {
  const ManifoldModel* manifold = nullptr;
  int resolution = 0;
  std::vector<Point> points;
  std::vector<double> weights;
};
QuadratureGrid quadrature_grid(const ManifoldModel& model, int resolution);

// max_p | sum_i e_i(p)^2 - dim E | over the given points.
double kernel_diagonal_check(const EigenspaceSpec& spec,
                             std::span<const Point> points);

} // namespace isogeom
