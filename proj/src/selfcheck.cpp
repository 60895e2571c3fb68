#include "isogeom/selfcheck.hpp"

#include <array>
#include <cmath>
#include <functional>
#include <sstream>

#include "isogeom/closedform.hpp"
#include "isogeom/estimators.hpp"
#include "isogeom/manifold.hpp"
#include "isogeom/sampling.hpp"
#include "isogeom/specfun.hpp"

namespace isogeom::selfcheck {

namespace {

struct Suite {
  SuiteResult res;
  explicit Suite(std::string name) { res.name = std::move(name); }
  void check(bool ok, const std::string& what) {
    ++res.checks;
    if (!ok) {
      ++res.failures;
      if (res.messages.size() < 12) res.messages.push_back(what);
    }
  }
  void check_close(double got, double want, double tol,
                   const std::string& what) {
    std::ostringstream os;
    os << what << ": got " << got << ", want " << want;
    check(std::isfinite(got) && std::fabs(got - want) <=
                                    tol * std::max(1.0, std::fabs(want)),
          os.str());
  }
};

double fd_derivative(const std::function<double(double)>& f, double x,
                     double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

} // namespace

SuiteResult specfun_suite() {
  Suite s("specfun");
  // frozen references
  s.check_close(log_gamma(1.0), 0.0, 1e-14, "lgamma(1)");
  s.check_close(log_gamma(0.5), 0.57236494292470008707, 1e-13, "lgamma(1/2)");
  s.check_close(log_gamma(10.0), 12.801827480081469611, 1e-13, "lgamma(10)");
  // sphere volumes against the independent two-step recurrence
  // varpi_k = 2 pi varpi_{k-2} / (k - 1), seeded by exact varpi_0, varpi_1.
  double even = 2.0, odd = 2.0 * M_PI;
  s.check_close(sphere_volume(0), even, 1e-12, "varpi_0");
  s.check_close(sphere_volume(1), odd, 1e-12, "varpi_1");
  for (int k = 2; k <= 64; ++k) {
    double& prev = (k % 2 == 0) ? even : odd;
    prev *= 2.0 * M_PI / (k - 1);
    s.check_close(sphere_volume(k), prev, 1e-12, "varpi_" + std::to_string(k));
  }
  // cap symmetry
  for (int d : {1, 2, 3, 5, 12, 37, 60}) {
    const double full = sphere_volume(d);
    for (double t = -1.0; t <= 1.0; t += 0.01) {
      const double lhs = cap_volume(d, t) + cap_volume(d, -t);
      s.check(std::fabs(lhs - full) <= 1e-10 * full, "cap symmetry");
    }
  }
  s.check_close(cap_volume(2, 0.5), M_PI, 1e-12, "kappa_2(1/2)");
  s.check_close(cap_volume(5, 0.0), 0.5 * sphere_volume(5), 1e-12,
                "kappa_5(0)");
  // derivative of the cap vs finite differences
  for (int d : {1, 3, 8, 25}) {
    for (double t = -0.9; t <= 0.9; t += 0.15) {
      const double got = fd_derivative(
          [d](double x) { return cap_volume(d, x); }, t, 1e-5);
      const double want =
          -sphere_volume(d - 1) * std::pow(1.0 - t * t, 0.5 * d - 1.0);
      s.check(std::fabs(got - want) <= 1e-6 * std::max(1.0, std::fabs(want)),
              "cap derivative");
    }
  }
  // erfc convention
  s.check_close(gauss_tail(0.0), 0.88622692545275801365, 1e-14, "erfc(0)");
  s.check_close(gauss_tail(-40.0), 1.7724538509055160273, 1e-13, "erfc(-40)");
  s.check(gauss_tail(40.0) < 1e-300, "erfc tail");
  // Gamma-ratio monotonicity on a log grid
  auto grid = [] {
    std::vector<double> g;
    for (double t = 0.1; t < 1.0e4; t *= 1.35) g.push_back(t);
    return g;
  }();
  for (double b : {0.3, 0.7}) {
    for (std::size_t i = 1; i < grid.size(); ++i)
      s.check(phi_ratio(b, grid[i]) < phi_ratio(b, grid[i - 1]),
              "phi_b decreasing, b in (0,1)");
  }
  for (double b : {1.5, 3.0, 10.0}) {
    for (std::size_t i = 1; i < grid.size(); ++i)
      s.check(phi_ratio(b, grid[i]) > phi_ratio(b, grid[i - 1]),
              "phi_b increasing, b > 1");
  }
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (grid[i - 1] > 0.4 + 1e-6)
      s.check(phi_ratio(-0.4, grid[i]) > phi_ratio(-0.4, grid[i - 1]),
              "phi_b increasing, b < 0");
  // strict Stirling sandwich on (1/2, 200]
  for (double t = 0.501; t <= 200.0; t += 0.25) {
    const double mid = std::exp(stirling_defect(t)) / std::sqrt(M_PI);
    s.check(1.0 > mid && mid > std::sqrt(2.0 / M_E), "Stirling sandwich");
  }
  s.check_close(stirling_defect(0.5), std::log(std::sqrt(M_PI)), 1e-13,
                "defect(1/2)");
  s.check_close(stirling_defect(1.0), 0.5, 1e-13, "defect(1)");
  s.check_close(stirling_defect(50.0) - 1.0 / 600.0,
                0.41893853320467274178, 1e-5, "defect limit");
  return s.res;
}

SuiteResult manifold_suite() {
  Suite s("manifold");
  const auto circle = make_circle_space({1, 2, 3});
  const auto torus = make_torus_space({{1, 0}, {1, 1}});
  const auto sphere = make_sphere_space({1, 3});
  const EigenspaceSpec* specs[3] = {&circle, &torus, &sphere};

  // derived constants
  s.check_close(circle.s, std::sqrt((1.0 + 4.0 + 9.0) / 3.0), 1e-14,
                "circle s");
  s.check(torus.dim_e == 8, "torus dim");
  s.check_close(torus.s * torus.s, 0.75, 1e-14, "torus s^2");
  s.check(sphere.dim_e == 10, "sphere dim");

  for (const auto* spec : specs) {
    const int res = 48;
    const auto grid = quadrature_grid(*spec->manifold, res);
    double wsum = 0.0;
    for (double w : grid.weights) wsum += w;
    s.check_close(wsum, 1.0, 1e-13, "weights sum");
    // Gram identity
    std::vector<double> gram(spec->dim_e * spec->dim_e, 0.0);
    std::vector<double> vals(spec->dim_e);
    for (std::size_t p = 0; p < grid.points.size(); ++p) {
      spec->eval_basis(grid.points[p], vals);
      for (int i = 0; i < spec->dim_e; ++i)
        for (int j = 0; j <= i; ++j)
          gram[i * spec->dim_e + j] += grid.weights[p] * vals[i] * vals[j];
    }
    double worst = 0.0;
    for (int i = 0; i < spec->dim_e; ++i)
      for (int j = 0; j <= i; ++j)
        worst = std::max(worst, std::fabs(gram[i * spec->dim_e + j] -
                                          (i == j ? 1.0 : 0.0)));
    s.check(worst <= 1e-10, "Gram identity " + spec->manifold->name());
    // kernel diagonal
    std::vector<Point> probes;
    for (int i = 0; i < 40; ++i)
      probes.push_back(grid.points[(i * 37) % grid.points.size()]);
    s.check(kernel_diagonal_check(*spec, probes) <= 1e-10 * spec->dim_e,
            "kernel diagonal " + spec->manifold->name());
    // gradient vs central differences (metric-corrected)
    CounterRng rng(7, 99);
    std::vector<std::array<double, 2>> grads(spec->dim_e);
    std::vector<double> v0(spec->dim_e), vp(spec->dim_e), vm(spec->dim_e);
    for (int trial = 0; trial < 25; ++trial) {
      Point p;
      if (spec->manifold->id == ManifoldId::Circle)
        p = {rng.uniform01() * 2.0 * M_PI, 0.0};
      else if (spec->manifold->id == ManifoldId::Torus2)
        p = {rng.uniform01() * 2.0 * M_PI, rng.uniform01() * 2.0 * M_PI};
      else
        p = {0.25 + rng.uniform01() * (M_PI - 0.5),
             rng.uniform01() * 2.0 * M_PI};
      spec->eval_basis_gradient(p, v0, grads);
      const double h = 1e-5;
      spec->eval_basis({p.a + h, p.b}, vp);
      spec->eval_basis({p.a - h, p.b}, vm);
      for (int i = 0; i < spec->dim_e; ++i) {
        const double fd = (vp[i] - vm[i]) / (2.0 * h);
        s.check(std::fabs(fd - grads[i][0]) <=
                    1e-6 * std::max(1.0, std::fabs(fd)),
                "grad a " + spec->manifold->name());
      }
      if (spec->manifold->m == 2) {
        spec->eval_basis({p.a, p.b + h}, vp);
        spec->eval_basis({p.a, p.b - h}, vm);
        const double metric =
            spec->manifold->id == ManifoldId::Sphere2 ? std::sin(p.a) : 1.0;
        for (int i = 0; i < spec->dim_e; ++i) {
          const double fd = (vp[i] - vm[i]) / (2.0 * h) / metric;
          s.check(std::fabs(fd - grads[i][1]) <=
                      1e-6 * std::max(1.0, std::fabs(fd)),
                  "grad b " + spec->manifold->name());
        }
      }
    }
    // Rayleigh identity per block
    CounterRng rng2(11, 3);
    for (const auto& blk : spec->blocks) {
      PolynomialSample u;
      u.spec = spec;
      u.coeffs.assign(spec->dim_e, 0.0);
      double n2 = 0.0;
      for (int i = 0; i < blk.dim; ++i) {
        u.coeffs[blk.offset + i] = rng2.normal();
        n2 += u.coeffs[blk.offset + i] * u.coeffs[blk.offset + i];
      }
      double energy = 0.0;
      std::array<double, 2> g;
      for (std::size_t p = 0; p < grid.points.size(); ++p) {
        u.evaluate_with_gradient(grid.points[p], g);
        energy += grid.weights[p] * (g[0] * g[0] + g[1] * g[1]);
      }
      s.check(std::fabs(energy - blk.lambda * n2) <=
                  1e-6 * std::max(1.0, blk.lambda * n2),
              "Rayleigh " + spec->manifold->name());
    }
    // certified ball constants: h^m(B(p,r)) > b varpi r^m on (0, r0)
    const auto& ball = spec->manifold->ball;
    for (int i = 1; i <= 64; ++i) {
      const double r = ball.r0 * i / 64.0 * 0.999;
      s.check(spec->manifold->ball_volume(r) >
                  ball.b * spec->manifold->total_volume *
                      std::pow(r, spec->manifold->m),
              "ball constants " + spec->manifold->name());
    }
  }
  return s.res;
}

SuiteResult closedform_suite() {
  Suite s("closedform");
  const auto torus = make_torus_space({{1, 0}});
  const auto sphere1 = make_sphere_space({1});
  const auto circle5 = make_circle_space({1, 2, 3, 4, 5});

  // frozen substitution values
  s.check_close(expected_level_measure(circle5, 0.0).value,
                6.6332495807107996982, 1e-12, "E_5");
  s.check_close(expected_level_measure(torus, 0.0).value,
                13.957728399277759068, 1e-12, "torus nodal mean");
  s.check_close(expected_excursion_volume(sphere1, 0.5).value, M_PI, 1e-12,
                "sphere excursion at c/2");
  s.check_close(expected_leray(torus, 0.0).value, 4.0 * M_PI, 1e-12,
                "torus Leray");
  s.check_close(moment_formula(1.0, 1), 0.90031631615710606956, 1e-14,
                "E(1,1)");

  // exact-consistency: l = 1 intersection equals the level measure bitwise
  {
    const EigenspaceSpec* one[1] = {&torus};
    const double t[1] = {0.3};
    s.check(expected_intersection_measure(one, t).value ==
                expected_level_measure(torus, 0.3).value,
            "l=1 consistency");
  }
  // derivative identity (reduced grid)
  for (const auto* spec : {&torus, &sphere1, &circle5}) {
    for (double t = -0.9; t <= 0.9; t += 0.3) {
      const double fd = fd_derivative(
          [&](double tau) { // tau is the absolute level
            return expected_excursion_volume(*spec, tau / spec->c).value;
          },
          t * spec->c, 1e-6 * spec->c);
      const double want = expected_leray(*spec, t).value;
      s.check(std::fabs(-fd - want) <= 1e-6 * std::max(1.0, want),
              "derivative identity");
    }
  }
  // functional quadrature vs the Gamma-ratio moment formula
  for (double a : {1.0, 3.0}) {
    for (const auto* spec : {&torus, &sphere1}) {
      const double got =
          expected_integral_functional(
              *spec, [a](double t) { return std::pow(std::fabs(t), a); })
              .value;
      s.check_close(got, moment_formula(a, spec->d), 1e-10, "f=|t|^a");
    }
  }
  // Gaussian law equals the radial law with a Gaussian density
  {
    const double sigma = 0.8;
    RadialDensity gauss(
        [sigma](double r) { return std::exp(-r * r / (sigma * sigma)); });
    const auto want = gaussian_expectations(torus, sigma, 0.4);
    const auto got = radial_expectations(torus, gauss, 0.4);
    s.check_close(got.level.value, want.level.value, 1e-8, "radial=gauss L");
    s.check_close(got.excursion.value, want.excursion.value, 1e-8,
                  "radial=gauss U");
    s.check_close(got.leray.value, want.leray.value, 1e-8, "radial=gauss l");
  }
  // block-splitting invariance
  {
    const auto whole = make_circle_space({2, 3});
    // same spectrum listed with a duplicate frequency collapses, so compare
    // against a torus split instead: (1,0) split into two equal-lambda blocks
    const auto split = make_torus_space({{1, 0}, {0, 1}}); // same orbit, merged
    s.check(split.dim_e == 4, "orbit merge");
    s.check_close(expected_level_measure(whole, 0.25).value,
                  recompute(expected_level_measure(whole, 0.25)), 0.0,
                  "recompute bitwise");
  }
  return s.res;
}

SuiteResult sampling_suite() {
  Suite s("sampling");
  const auto sphere = make_sphere_space({2});
  // bit-reproducibility
  const SeedPolicy pol{123456789, 42};
  const auto u1 = sample_uniform_sphere(sphere, pol);
  const auto u2 = sample_uniform_sphere(sphere, pol);
  s.check(u1.coeffs == u2.coeffs, "reproducible draws");
  s.check(std::fabs(u1.norm - 1.0) <= 1e-14, "unit norm");
  // neighbouring trials differ
  const auto u3 = sample_uniform_sphere(sphere, {123456789, 43});
  s.check(u1.coeffs != u3.coeffs, "distinct trials");
  // coefficient moments
  const int n = 20000;
  double mean = 0.0, mean2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto u = sample_uniform_sphere(sphere, {5, static_cast<std::uint64_t>(i)});
    mean += u.coeffs[0];
    mean2 += u.coeffs[0] * u.coeffs[0];
  }
  mean /= n;
  mean2 /= n;
  s.check(std::fabs(mean) < 4.0 / std::sqrt(static_cast<double>(n)),
          "coeff mean ~ 0");
  s.check(std::fabs(mean2 - 1.0 / sphere.dim_e) < 4.0 * 0.2 / std::sqrt(1.0 * n),
          "coeff second moment ~ 1/dim");
  // Gaussian normalization: sigma = sqrt(2) gives unit-variance coordinates
  double g2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto u = sample_gaussian(sphere, M_SQRT2, {6, static_cast<std::uint64_t>(i)});
    g2 += u.coeffs[1] * u.coeffs[1];
  }
  s.check(std::fabs(g2 / n - 1.0) < 5.0 * M_SQRT2 / std::sqrt(1.0 * n),
          "gaussian coordinate variance");
  return s.res;
}

SuiteResult estimator_suite() {
  Suite s("estimators");
  const auto circle = make_circle_space({1});
  EstimatorContext cctx(circle, 64);
  PolynomialSample sine;
  sine.spec = &circle;
  sine.coeffs = {0.0, 1.0}; // u = sqrt(2) sin(theta)
  sine.norm = 1.0;
  s.check(count_zeros_circle(sine, 0.0, 64) == 2, "sin zero count");
  s.check(count_zeros_circle(sine, 10.0, 64) == 0, "level above sup");
  s.check_close(leray_coarea(sine, 0.0, cctx).value, M_SQRT2, 1e-9,
                "sin coarea");
  s.check_close(integral_abs_power(sine, 4.0, cctx), 1.5, 1e-12,
                "|sin|^4 moment");
  const auto sup = sup_norm(sine, cctx);
  s.check_close(sup.refined_max, M_SQRT2, 1e-9, "sin sup");
  s.check(sup.certified_upper >= sup.refined_max, "certificate ordering");

  const auto torus = make_torus_space({{1, 0}});
  EstimatorContext tctx(torus, 96);
  PolynomialSample cosx;
  cosx.spec = &torus;
  cosx.coeffs = {1.0, 0.0, 0.0, 0.0}; // sqrt(2) cos x
  cosx.norm = 1.0;
  const auto line = nodal_length_2d(cosx, 0.0, *tctx.mesh);
  s.check(std::fabs(line.total_length - 4.0 * M_PI) <= 1e-3 * 4.0 * M_PI,
          "cos x nodal length");
  // scale equivariance of the crossing scan
  CounterRng rng(21, 0);
  for (int i = 0; i < 5; ++i) {
    auto u = sample_uniform_sphere(circle, rng);
    const double t = 0.3;
    const int base = count_zeros_circle(u, t, 64);
    for (double r : {0.5, 2.0, 10.0}) {
      auto ru = u;
      for (auto& ci : ru.coeffs) ci *= r;
      ru.norm *= r;
      s.check(count_zeros_circle(ru, r * t, 64) == base, "scale equivariance");
    }
  }
  // Leray estimator pair: means agree (the shell carries quantization noise
  // per sample at this reduced resolution; the 1% check at acceptance
  // resolution lives in the estimator tests)
  double sum_co = 0.0, sum_sh = 0.0;
  int total = 0;
  for (int i = 0; i < 20; ++i) {
    auto u = sample_uniform_sphere(torus, {31, static_cast<std::uint64_t>(i)});
    const auto co = leray_coarea(u, 0.1, tctx);
    const auto sh = leray_eps_shell(u, 0.1, 0.02, *tctx.quad);
    if (co.near_critical) continue;
    ++total;
    sum_co += co.value;
    sum_sh += sh.value;
    s.check(std::fabs(co.value - sh.value) <=
                0.3 * std::max(co.value, sh.value),
            "leray pair per-sample sanity");
  }
  s.check(total >= 18 && std::fabs(sum_co - sum_sh) <= 0.05 * sum_co,
          "leray pair mean agreement");

  const auto sphere = make_sphere_space({1});
  PolynomialSample harmonic;
  harmonic.spec = &sphere;
  harmonic.coeffs = {0.0, 1.0, 0.0}; // a degree-1 harmonic
  harmonic.norm = 1.0;
  const auto great = nodal_length_2d(harmonic, 0.0, 64);
  s.check(std::fabs(great.total_length - 2.0 * M_PI) <= 2e-3 * 2.0 * M_PI,
          "great circle length");
  PolynomialSample cosy;
  cosy.spec = &torus;
  cosy.coeffs = {0.0, 0.0, 1.0, 0.0}; // sqrt(2) cos y
  cosy.norm = 1.0;
  s.check(common_zero_count(cosx, cosy, *tctx.mesh) == 4, "cos x vs cos y");
  return s.res;
}

std::vector<SuiteResult> run_all() {
  return {specfun_suite(), manifold_suite(), closedform_suite(),
          sampling_suite(), estimator_suite()};
}

} // namespace isogeom::selfcheck
