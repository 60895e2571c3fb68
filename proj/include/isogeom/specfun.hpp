#pragma once

// Special functions shared by the closed-form expectation formulas:
// log-Gamma, Beta, unit-sphere volumes, spherical cap volumes, the
// Gaussian tail integral, and two monotone Gamma-ratio diagnostics.
// All Gamma ratios are evaluated in log space so that dimensions in the
// thousands do not overflow.

namespace isogeom {

// ln Gamma(x) for x > 0. Throws std::domain_error otherwise.
double log_gamma(double x);

// varpi_k = 2 pi^{(k+1)/2} / Gamma((k+1)/2), the k-area of the unit k-sphere.
double sphere_volume(int k);
double log_sphere_volume(int k);

// kappa_d(t) = varpi_{d-1} * int_t^1 (1 - tau^2)^{d/2-1} dtau for t in [-1,1],
// extended by varpi_d for t <= -1 and 0 for t >= 1. Evaluated through the
// regularized incomplete Beta function; accurate near t = +-1 for large d.
double cap_volume(int d, double t);

// The bare Gaussian tail integral int_t^inf e^{-tau^2} dtau. Differs from
// the conventional erfc by a factor sqrt(pi)/2; kept as its own function so
// the factor cannot silently leak.
double gauss_tail(double t);

// phi_b(t) = t^b Gamma(t) / Gamma(t + b); requires t > 0 and t + b > 0.
// Decreasing in t for b in (0,1), increasing for b > 1 and (for b < 0) on
// (-b, inf); tends to 1 as t -> inf.
double phi_ratio(double b, double t);

// f(t) = ln( (e/t)^{t-1/2} Gamma(t) ); strictly decreasing on (1/2, inf)
// with limit ln sqrt(2 pi / e).
double stirling_defect(double t);

// ln B(a, b)
double log_beta(double a, double b);

// Regularized incomplete Beta I_x(a, b), continued-fraction evaluation.
double incomplete_beta_reg(double a, double b, double x);

} // namespace isogeom
