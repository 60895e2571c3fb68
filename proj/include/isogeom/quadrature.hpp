#pragma once

#include <functional>
#include <span>
#include <vector>

namespace isogeom {

// Adaptive Gauss-Kronrod (G7,K15) on [a, b]. Subdivides until the local
// error estimate is below max(rel_tol * |integral|, abs_tol).
// Throws std::runtime_error when the interval budget is exhausted.
double integrate_adaptive(const std::function<double(double)>& f, double a,
                          double b, double rel_tol = 1e-12,
                          double abs_tol = 1e-300, int max_intervals = 4000);

// Same, but with mandatory initial breakpoints (useful when the integrand
// has known narrow features, e.g. a spike-shaped radial density).
double integrate_adaptive_pts(const std::function<double(double)>& f,
                              std::span<const double> breakpoints,
                              double rel_tol = 1e-12, double abs_tol = 1e-300,
                              int max_intervals = 4000);

// Gauss-Legendre nodes and weights on [-1, 1]; weights sum to 2.
void gauss_legendre(int n, std::vector<double>& nodes,
                    std::vector<double>& weights);

} // namespace isogeom
