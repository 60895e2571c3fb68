// Acceptance suite: every criterion prints one [criterion N] PASS/FAIL line.
// Tolerances are pinned here, not configurable.

#include <omp.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "doctest.h"
#include "isogeom/closedform.hpp"
#include "isogeom/estimators.hpp"
#include "isogeom/harness.hpp"
#include "isogeom/manifold.hpp"
#include "isogeom/sampling.hpp"
#include "isogeom/selfcheck.hpp"
#include "isogeom/specfun.hpp"

using namespace isogeom;

namespace {

struct Timer {
  double start = omp_get_wtime();
  double elapsed() const { return omp_get_wtime() - start; }
};

void report_line(int criterion, const std::string& what, bool pass,
                 double seconds) {
  std::printf("[criterion %2d] %-58s %s (%.1fs)\n", criterion, what.c_str(),
              pass ? "PASS" : "FAIL", seconds);
  std::fflush(stdout);
}

ExperimentConfig base_config() {
  ExperimentConfig cfg;
  cfg.master_seed = 271828;
  return cfg;
}

} // namespace

TEST_CASE("criterion 1: Qualls zero-count expectation on the circle") {
  Timer timer;
  bool pass = true;
  const double expected[3] = {2.0, 6.6332495807107996982,
                              23.958297101421878811};
  const int ns[3] = {1, 5, 20};
  for (int i = 0; i < 3; ++i) {
    auto cfg = base_config();
    cfg.manifold = ManifoldId::Circle;
    for (int k = 1; k <= ns[i]; ++k) cfg.circle_spectrum.push_back(k);
    cfg.quantity = Quantity::Zeros;
    cfg.levels = {0.0};
    cfg.samples = 2000;
    cfg.resolution = 64;
    const auto reports = cmd_simulate(cfg);
    REQUIRE(reports.size() == 1);
    CHECK(std::fabs(reports[0].closed_form.value - expected[i]) <= 1e-12);
    CHECK(reports[0].pass);
    pass = pass && reports[0].pass &&
           std::fabs(reports[0].closed_form.value - expected[i]) <= 1e-12;
  }
  const double secs = timer.elapsed();
  CHECK(secs < 60.0);
  report_line(1, "Qualls zero count, circle K={1..n}, n in {1,5,20}", pass,
              secs);
}

TEST_CASE("criterion 2: L^1 moment on the circle, d = 1") {
  Timer timer;
  const double ref = 0.90031631615710606956; // 2 sqrt(2) / pi
  CHECK(std::fabs(moment_formula(1.0, 1) - ref) <= 1e-14);
  auto cfg = base_config();
  cfg.manifold = ManifoldId::Circle;
  cfg.circle_spectrum = {1};
  cfg.quantity = Quantity::Lp;
  cfg.power_a = 1.0;
  cfg.samples = 10000;
  cfg.resolution = 256;
  const auto reports = cmd_simulate(cfg);
  REQUIRE(reports.size() == 1);
  CHECK(reports[0].kind == ComparisonKind::Exact);
  CHECK(std::fabs(reports[0].closed_form.value - ref) <= 1e-14);
  CHECK(reports[0].pass);
  const double secs = timer.elapsed();
  CHECK(secs < 60.0);
  report_line(2, "M||u||_1 = 2 sqrt(2)/pi at d = 1", reports[0].pass, secs);
}

TEST_CASE("criterion 3: nodal length on torus and sphere") {
  bool pass = true;
  {
    Timer timer;
    auto cfg = base_config();
    cfg.manifold = ManifoldId::Torus2;
    cfg.torus_generators = {{1, 0}};
    cfg.quantity = Quantity::LevelMeasure;
    cfg.levels = {0.0, 0.5};
    cfg.samples = 10000;
    cfg.resolution = 256;
    const auto reports = cmd_simulate(cfg);
    REQUIRE(reports.size() == 2);
    const double want[2] = {13.957728399277759068,
                            13.957728399277759068 * 0.75};
    for (int i = 0; i < 2; ++i) {
      CHECK(std::fabs(reports[i].closed_form.value - want[i]) <= 1e-12);
      const double tol = std::max(3.0 * reports[i].estimate.stderr_val,
                                  0.01 * reports[i].closed_form.value);
      const bool ok =
          std::fabs(reports[i].estimate.mean - reports[i].closed_form.value) <=
          tol;
      CHECK(ok);
      pass = pass && ok;
    }
    const double secs = timer.elapsed();
    CHECK(secs < 600.0);
    report_line(3, "torus orbit (1,0) nodal length, t in {0, 0.5}", pass, secs);
  }
  {
    Timer timer;
    auto cfg = base_config();
    cfg.manifold = ManifoldId::Sphere2;
    cfg.sphere_degrees = {4};
    cfg.quantity = Quantity::LevelMeasure;
    cfg.levels = {0.0};
    cfg.samples = 3000;
    cfg.resolution = 256;
    const auto reports = cmd_simulate(cfg);
    REQUIRE(reports.size() == 1);
    CHECK(std::fabs(reports[0].closed_form.value - 19.869176531592202469) <=
          1e-12);
    const double tol = std::max(3.0 * reports[0].estimate.stderr_val,
                                0.01 * reports[0].closed_form.value);
    const bool ok =
        std::fabs(reports[0].estimate.mean - reports[0].closed_form.value) <=
        tol;
    CHECK(ok);
    pass = pass && ok;
    const double secs = timer.elapsed();
    CHECK(secs < 600.0);
    report_line(3, "sphere degree 4 nodal length = 2 pi sqrt(10)", ok, secs);
  }
}

TEST_CASE("criterion 4: excursion volume on the degree-1 sphere") {
  Timer timer;
  auto cfg = base_config();
  cfg.manifold = ManifoldId::Sphere2;
  cfg.sphere_degrees = {1};
  cfg.quantity = Quantity::Excursion;
  cfg.levels = {-0.5, 0.0, 0.5};
  cfg.samples = 10000;
  cfg.resolution = 256;
  const auto reports = cmd_simulate(cfg);
  REQUIRE(reports.size() == 3);
  const double want[3] = {3.0 * M_PI, 2.0 * M_PI, M_PI};
  bool pass = true;
  for (int i = 0; i < 3; ++i) {
    CHECK(std::fabs(reports[i].closed_form.value - want[i]) <= 1e-12);
    CHECK(reports[i].pass);
    pass = pass && reports[i].pass;
  }
  const double secs = timer.elapsed();
  CHECK(secs < 300.0);
  report_line(4, "sphere degree-1 excursion, t in {-0.5, 0, 0.5}", pass, secs);
}

TEST_CASE("criterion 5: Leray measure, uniform and normalized Gaussian") {
  Timer timer;
  bool pass = true;
  const double uniform_ref = 4.0 * M_PI;
  for (Quantity q : {Quantity::LerayShell, Quantity::LerayCoarea}) {
    auto cfg = base_config();
    cfg.manifold = ManifoldId::Torus2;
    cfg.torus_generators = {{1, 0}};
    cfg.quantity = q;
    cfg.levels = {0.0};
    cfg.samples = 10000;
    cfg.resolution = 256;
    cfg.epsilon = 0.01;
    const auto reports = cmd_simulate(cfg);
    REQUIRE(reports.size() == 1);
    CHECK(std::fabs(reports[0].closed_form.value - uniform_ref) <= 1e-12);
    const double tol = std::max(3.0 * reports[0].estimate.stderr_val,
                                0.015 * uniform_ref);
    const bool ok =
        std::fabs(reports[0].estimate.mean - uniform_ref) <= tol;
    CHECK(ok);
    pass = pass && ok;
  }
  // normalized Gaussian law: sigma c = sqrt(2) makes the mean varpi/sqrt(2 pi)
  const double gauss_ref = 15.749609945722419744;
  for (Quantity q : {Quantity::LerayShell, Quantity::LerayCoarea}) {
    auto cfg = base_config();
    cfg.manifold = ManifoldId::Torus2;
    cfg.torus_generators = {{1, 0}};
    cfg.distribution = Distribution::GaussianNormalized;
    cfg.quantity = q;
    cfg.levels = {0.0};
    cfg.samples = 10000;
    cfg.resolution = 256;
    cfg.epsilon = 0.01;
    const auto reports = cmd_simulate(cfg);
    REQUIRE(reports.size() == 1);
    CHECK(std::fabs(reports[0].closed_form.value - gauss_ref) <= 1e-12);
    const double tol = std::max(3.0 * reports[0].estimate.stderr_val,
                                0.015 * gauss_ref);
    const bool ok = std::fabs(reports[0].estimate.mean - gauss_ref) <= tol;
    CHECK(ok);
    pass = pass && ok;
  }
  const double secs = timer.elapsed();
  CHECK(secs < 600.0);
  report_line(5, "torus Leray: 4 pi (uniform), varpi/sqrt(2 pi) (Gaussian)",
              pass, secs);
}

TEST_CASE("criterion 6: common zeros of independent pairs") {
  Timer timer;
  bool pass = true;
  {
    auto cfg = base_config();
    cfg.manifold = ManifoldId::Torus2;
    cfg.torus_generators = {{1, 0}};
    cfg.quantity = Quantity::CommonZeros;
    cfg.levels = {0.0};
    cfg.samples = 10000;
    cfg.resolution = 128;
    const auto reports = cmd_simulate(cfg);
    REQUIRE(reports.size() == 1);
    CHECK(std::fabs(reports[0].closed_form.value - M_PI) <= 1e-12);
    CHECK(reports[0].pass);
    pass = pass && reports[0].pass;
  }
  {
    auto cfg = base_config();
    cfg.manifold = ManifoldId::Sphere2;
    cfg.sphere_degrees = {1};
    cfg.quantity = Quantity::CommonZeros;
    cfg.levels = {0.0};
    cfg.samples = 10000;
    cfg.resolution = 128;
    const auto reports = cmd_simulate(cfg);
    REQUIRE(reports.size() == 1);
    CHECK(std::fabs(reports[0].closed_form.value - 2.0) <= 1e-12);
    CHECK(reports[0].pass);
    pass = pass && reports[0].pass;
  }
  const double secs = timer.elapsed();
  CHECK(secs < 600.0);
  report_line(6, "common zeros: torus pairs (pi), sphere pairs (2)", pass,
              secs);
}

TEST_CASE("criterion 7: functional quadrature reproduces E(a, d)") {
  Timer timer;
  bool pass = true;
  auto spec_for_d = [](int d) -> EigenspaceSpec {
    switch (d) {
      case 1: return make_circle_space({1});
      case 2: return make_sphere_space({1});
      case 5: return make_circle_space({1, 2, 3});
      case 20: return make_sphere_space({10});
      default: {
        std::vector<int> ks; // d = 99 is the large-d cell (dim 100)
        for (int k = 1; k <= 50; ++k) ks.push_back(k);
        return make_circle_space(ks);
      }
    }
  };
  for (int d : {1, 2, 5, 20, 100}) {
    const auto spec = spec_for_d(d);
    for (double a : {0.5, 1.0, 3.0, 6.0}) {
      const double got =
          expected_integral_functional(
              spec, [a](double t) { return std::pow(std::fabs(t), a); })
              .value;
      const double want = moment_formula(a, spec.d);
      const bool ok = std::fabs(got - want) <= 1e-10 * want;
      CHECK(ok);
      pass = pass && ok;
    }
  }
  const double secs = timer.elapsed();
  CHECK(secs < 1.0);
  report_line(7, "Eq. quadrature = Gamma-ratio moment, rel 1e-10", pass, secs);
}

TEST_CASE("criterion 8: bound suite on all three manifolds") {
  Timer timer;
  bool pass = true;
  struct ModelSpec {
    ExperimentConfig cfg;
    std::string label;
  };
  std::vector<ModelSpec> models;
  {
    auto cfg = base_config();
    cfg.manifold = ManifoldId::Circle;
    cfg.circle_spectrum = {1, 2, 3, 4, 5};
    cfg.resolution = 512;
    models.push_back({cfg, "circle"});
  }
  {
    auto cfg = base_config();
    cfg.manifold = ManifoldId::Torus2;
    cfg.torus_generators = {{1, 0}, {1, 1}};
    cfg.resolution = 64;
    models.push_back({cfg, "torus"});
  }
  {
    auto cfg = base_config();
    cfg.manifold = ManifoldId::Sphere2;
    cfg.sphere_degrees = {1, 2};
    cfg.resolution = 64;
    models.push_back({cfg, "sphere"});
  }
  for (auto& model : models) {
    model.cfg.samples = 5000;
    const auto spec = model.cfg.build_space();
    const EstimatorContext ctx(spec, model.cfg.resolution);
    for (double a : {2.0, 4.0, 8.0}) {
      auto cfg = model.cfg;
      cfg.quantity = Quantity::Lp;
      cfg.power_a = a;
      const auto values = run_trials(cfg, spec, ctx, 0.0, cfg.samples, 0, true);
      const auto est = aggregate(values, cfg.master_seed);
      const bool ok = est.mean < std::sqrt((a + 1.0) / M_E);
      CHECK(ok);
      pass = pass && ok;
    }
    // Lipschitz-ball inequality sample-wise with the model's certified (b, r0)
    const auto& ball = spec.manifold->ball;
    const double r = std::min(0.5 * ball.r0, 1.0 / spec.kappa);
    for (int i = 0; i < 200; ++i) {
      const auto u = sample_uniform_sphere(
          spec, SeedPolicy{model.cfg.master_seed, static_cast<std::uint64_t>(i)});
      const double sup = sup_norm(u, ctx).refined_max;
      for (double a : {2.0, 4.0}) {
        const double rhs = std::pow(ball.b, -1.0 / a) *
                               std::pow(r, -spec.manifold->m / a) *
                               lp_norm(u, a, ctx) +
                           spec.kappa * r;
        const bool ok = sup <= rhs;
        if (!ok) CHECK(ok);
        pass = pass && ok;
      }
    }
  }
  // Stirling sandwich strict on (1/2, 200]
  {
    bool ok = true;
    const double lower = std::sqrt(2.0 / M_E);
    for (double t = 0.5005; t <= 200.0; t += 0.005) {
      const double mid = std::exp(stirling_defect(t)) / std::sqrt(M_PI);
      if (!(mid < 1.0 && mid > lower)) ok = false;
    }
    CHECK(ok);
    pass = pass && ok;
  }
  const double secs = timer.elapsed();
  CHECK(secs < 600.0);
  report_line(8, "L^p bounds, Stirling sandwich, Lipschitz-ball bound", pass,
              secs);
}

TEST_CASE("criterion 9: derivative identity Leray = -d/dtau excursion") {
  Timer timer;
  bool pass = true;
  const auto d2 = make_sphere_space({1});
  const auto d3 = make_torus_space({{1, 0}});
  const auto d5 = make_circle_space({1, 2, 3});
  const auto d20 = make_sphere_space({10});
  for (const EigenspaceSpec* spec : {&d2, &d3, &d5, &d20}) {
    for (double t = -0.9; t <= 0.9001; t += 0.05) {
      const double h = 1e-6 * spec->c;
      const double up =
          expected_excursion_volume(*spec, (t * spec->c + h) / spec->c).value;
      const double dn =
          expected_excursion_volume(*spec, (t * spec->c - h) / spec->c).value;
      const double fd = -(up - dn) / (2.0 * h);
      const double want = expected_leray(*spec, t).value;
      const bool ok = std::fabs(fd - want) <= 1e-7 * std::max(1.0, want);
      if (!ok) CHECK(ok);
      pass = pass && ok;
    }
  }
  CHECK(pass);
  const double secs = timer.elapsed();
  CHECK(secs < 1.0);
  report_line(9, "finite-difference excursion slope matches Leray, 1e-7",
              pass, secs);
}

TEST_CASE("criterion 10: property suites") {
  Timer timer;
  bool pass = true;

  // Gram / kernel / gradient / Rayleigh suites at the spec tolerances
  const auto manifold_suite = selfcheck::manifold_suite();
  CHECK(manifold_suite.failures == 0);
  pass = pass && manifold_suite.ok();

  // leray estimator pair: means over 100 samples within 1%
  {
    const auto torus = make_torus_space({{1, 0}});
    EstimatorContext ctx(torus, 256);
    double sum_co = 0.0, sum_sh = 0.0;
    int used = 0;
    for (int i = 0; i < 100; ++i) {
      const auto u =
          sample_uniform_sphere(torus, {4242, static_cast<std::uint64_t>(i)});
      const auto co = leray_coarea(u, 0.1, ctx);
      if (co.near_critical) continue;
      sum_co += co.value;
      sum_sh += leray_eps_shell(u, 0.1, 1e-2, *ctx.quad).value;
      ++used;
    }
    const bool ok = used >= 95 &&
                    std::fabs(sum_co / used - sum_sh / used) <=
                        0.01 * (sum_co / used);
    CHECK(ok);
    pass = pass && ok;
  }

  // parallel determinism: byte-identical reports at 1/4/16 threads
  {
    auto cfg = base_config();
    cfg.manifold = ManifoldId::Sphere2;
    cfg.sphere_degrees = {2};
    cfg.quantity = Quantity::LevelMeasure;
    cfg.levels = {0.0, 0.3};
    cfg.samples = 128;
    cfg.resolution = 48;
    std::string first;
    bool same = true;
    for (int threads : {1, 4, 16}) {
      cfg.threads = threads;
      const auto reports = cmd_simulate(cfg);
      const auto json = reports_to_json(reports, cfg, false);
      if (first.empty()) first = json;
      else same = same && (json == first);
    }
    CHECK(same);
    pass = pass && same;
  }
  const double secs = timer.elapsed();
  report_line(10, "Gram/kernel/gradient/Rayleigh, leray pair, determinism",
              pass, secs);
}
