#pragma once

// Exact expectation formulas over the uniform law on the unit sphere of an
// eigenspace, their Gaussian/radial-law counterparts, the dim->infinity
// limits, and the universal L^p / sup bounds.
//
// Level convention: every API takes t_scaled = (absolute level) / c, so the
// admissible range for sphere-law queries is [-1, 1]. Absolute levels are
// converted exactly once, at the harness boundary.

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "isogeom/manifold.hpp"

namespace isogeom {

enum class FormulaId {
  LevelMeasure,          // varpi (varpi_{m-1}/varpi_m) s (1-t^2)^{(d-1)/2}
  ExcursionVolume,       // varpi kappa_d(t) / varpi_d
  IntersectionMeasure,   // (varpi_{r-l}/varpi_r) h^r(X) prod s_i (1-t_i^2)^{(d_i-1)/2}
  IntersectionExcursion, // h^r(X) prod kappa_{d_i}(t_i)/varpi_{d_i}
  Leray,                 // (varpi varpi_{d-1} / (c varpi_d)) (1-t^2)^{d/2-1}
  IntegralFunctional,    // weighted integral of f against the level density
  Moment,                // E(a,d)
  GaussLevel,
  GaussExcursion,
  GaussLeray,
  RadialLevel,
  RadialExcursion,
  RadialLeray,
  LpBound,   // sqrt((a+1)/e), the universal L^a-mean bound
  SupBoundC, // c = sqrt(dim E), the sharp pointwise sup bound
};

struct FormulaInputs {
  int m = 0;
  double total_volume = 0.0;
  int d = 0;
  double c = 0.0;
  double s = 0.0;
  double t_scaled = 0.0;
  double sigma = 0.0; // Gaussian law only
  double a = 0.0;     // moment order
  int l = 0;          // number of intersected fields
  double subset_measure = 0.0; // h^r(X); X = M here
  // per-field data for intersection formulas
  std::vector<double> s_list, t_list;
  std::vector<int> d_list;
};

struct ClosedForm {
  double value = 0.0;
  FormulaId id = FormulaId::LevelMeasure;
  FormulaInputs inputs;
  std::string to_json() const;  // flat record {formula, inputs..., value}
  std::string to_csv_row() const;
};

// Recomputes the value of an algebraic formula from its stored inputs;
// bit-identical to the original computation. Quadrature-backed records
// (IntegralFunctional, Radial*) cannot be recomputed without the density
// and are rejected.
double recompute(const ClosedForm& cf);
bool recomputable(FormulaId id);

// A level query as the harness sees it: scaled level plus the sampling law.
struct LevelQuery {
  double t_scaled = 0.0;
  enum class Law { UniformSphere, Gaussian, Radial } law = Law::UniformSphere;
  double sigma = 0.0;
};

// Conversion between scaled and absolute levels (level = c * t_scaled).
inline double absolute_level(const EigenspaceSpec& spec, double t_scaled) {
  return t_scaled * spec.c;
}
inline double scaled_level(const EigenspaceSpec& spec, double level) {
  return level / spec.c;
}

// Radial density alpha(|x|): nonnegative, not identically zero, with finite
// moments a_k = int_0^inf r^k alpha(r) dr. Support is located numerically at
// construction so that spike-shaped densities integrate reliably.
class RadialDensity {
public:
  explicit RadialDensity(std::function<double(double)> alpha,
                         double support_hint = 0.0);
  double alpha(double r) const { return fn_(r); }
  double moment(int k) const; // a_k
  double support_lo() const { return lo_; }
  double support_hi() const { return hi_; }
  // radii where the scan saw alpha jump (spike/table edges); quadratures
  // must break panels there or a narrow feature can slip between nodes
  const std::vector<double>& feature_radii() const { return features_; }
  // int_0^inf w^p alpha(sqrt(t^2 + w^2)) dw  (p >= 0, t >= 0)
  double tail_integral(double p, double t) const;

private:
  std::function<double(double)> fn_;
  double lo_ = 0.0, hi_ = 0.0;
  std::vector<double> features_;
  mutable std::vector<double> moment_cache_;
};

ClosedForm expected_level_measure(const EigenspaceSpec& spec, double t_scaled);
ClosedForm expected_excursion_volume(const EigenspaceSpec& spec,
                                     double t_scaled);
// l = specs.size() <= m common level sets intersected with X = M (r = m).
ClosedForm expected_intersection_measure(
    std::span<const EigenspaceSpec* const> specs,
    std::span<const double> t_scaled);
ClosedForm expected_intersection_excursion(
    std::span<const EigenspaceSpec* const> specs,
    std::span<const double> t_scaled);
ClosedForm expected_leray(const EigenspaceSpec& spec, double t_scaled);
// M(I_f) with I_f(u) = int_M f(u(p)) dp over the probability measure, so
// f == 1 gives exactly 1. f is piecewise continuous on [-c, c].
ClosedForm expected_integral_functional(const EigenspaceSpec& spec,
                                        const std::function<double(double)>& f,
                                        double rel_tol = 1e-11);

// E(a, d) = Gamma((a+1)/2) Gamma((d+1)/2) (d+1)^{a/2} /
//           (sqrt(pi) Gamma((a+d+1)/2)), for a > -1.
double moment_formula(double a, int d);
// lim_{d->inf} E(a, d) = 2^{a/2} Gamma((a+1)/2) / sqrt(pi)
double moment_limit(double a);

struct LpBounds {
  double universal;  // sqrt((a+1)/e), valid for a >= 2
  double asymptotic; // sqrt(2) pi^{-1/(2a)} Gamma((a+1)/2)^{1/a}, a >= 1
};
LpBounds lp_mean_bound(double a);

struct SupBound {
  double log_bound;    // (e^{m-1/2} + eps) sqrt(ln kappa); NaN if kappa <= 1
  double trivial_c;    // sqrt(dim E), attained on u = iota(q)
  bool informative;    // log bound exists and is below c
};
SupBound sup_mean_bound(const EigenspaceSpec& spec, double epsilon);

struct RadialExpectations {
  ClosedForm level, excursion, leray;
};
RadialExpectations radial_expectations(const EigenspaceSpec& spec,
                                       const RadialDensity& density,
                                       double t_scaled);
RadialExpectations gaussian_expectations(const EigenspaceSpec& spec,
                                         double sigma, double t_scaled);

// dim->infinity limits at an unscaled level t, with X = M.
struct AsymptoticLimits {
  double level_per_s; // lim (1/s) M(h^{m-1}(L^t))
  double excursion;   // lim M(h^m(U^t))
  double leray;       // lim M(leray(L^t))
};
AsymptoticLimits asymptotic_limits(double t, const ManifoldModel& model);
// lim M(I_f) = (1/sqrt(2 pi)) int f(t) e^{-t^2/2} dt
double asymptotic_functional(const std::function<double(double)>& f,
                             double rel_tol = 1e-11);

} // namespace isogeom
