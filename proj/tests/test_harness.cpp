#include <cmath>
#include <cstdio>
#include <fstream>
#include <vector>

#include "doctest.h"
#include "isogeom/harness.hpp"

using namespace isogeom;

namespace {

const char* kTorusConfig = R"(
# excursion run on the torus
manifold = torus2
spectrum = (1,0)
distribution = uniform_sphere
quantity = excursion
levels = 0, 0.4
samples = 96
resolution = 48
master_seed = 20240817
)";

} // namespace

TEST_CASE("config parsing") {
  const auto cfg = ExperimentConfig::from_string(kTorusConfig);
  CHECK(cfg.manifold == ManifoldId::Torus2);
  CHECK(cfg.torus_generators.size() == 1);
  CHECK(cfg.quantity == Quantity::Excursion);
  CHECK(cfg.levels == std::vector<double>{0.0, 0.4});
  CHECK(cfg.samples == 96);
  CHECK(cfg.master_seed == 20240817);

  const auto circle = ExperimentConfig::from_string(
      "manifold = circle\nspectrum = 1,2,3\nquantity = zeros\n");
  CHECK(circle.circle_spectrum == std::vector<int>{1, 2, 3});

  const auto lp = ExperimentConfig::from_string(
      "manifold = sphere2\nspectrum = 1\nquantity = lp:4\n");
  CHECK(lp.quantity == Quantity::Lp);
  CHECK(lp.power_a == 4.0);

  const auto gauss = ExperimentConfig::from_string(
      "manifold = torus2\nspectrum = (1,0)\nquantity = leray_shell\n"
      "distribution = gaussian:0.75\n");
  CHECK(gauss.distribution == Distribution::Gaussian);
  CHECK(gauss.sigma == 0.75);
}

TEST_CASE("config validation errors") {
  auto expect_error = [](const std::string& text) {
    CHECK_THROWS_AS(ExperimentConfig::from_string(text), ConfigError);
  };
  expect_error("spectrum = 1\nquantity = zeros\n"); // missing manifold
  expect_error("manifold = circle\nquantity = zeros\n"); // missing spectrum
  expect_error("manifold = circle\nspectrum = 1\n");     // missing quantity
  expect_error("manifold = klein\nspectrum = 1\nquantity = zeros\n");
  expect_error("manifold = circle\nspectrum = 1\nquantity = wiggle\n");
  expect_error("manifold = torus2\nspectrum = (1,0)\nquantity = zeros\n");
  expect_error("manifold = circle\nspectrum = 1\nquantity = common_zeros\n");
  expect_error("manifold = circle\nspectrum = 1\nquantity = lp:0.5\n");
  expect_error("manifold = circle\nspectrum = 1\nquantity = zeros\nlevels = 1.5\n");
  expect_error("manifold = circle\nspectrum = 1\nquantity = zeros\nsamples = 1\n");
  expect_error("manifold = circle\nspectrum = 1\nquantity = zeros\nbogus = 3\n");
  expect_error("manifold = torus2\nspectrum = (1,0\nquantity = excursion\n");
  expect_error(
      "manifold = circle\nspectrum = 1\nquantity = sup\ndistribution = "
      "gaussian:1\n"); // norm quantities are uniform-law only
  CHECK_THROWS_AS(ExperimentConfig::from_file("/nonexistent/x.cfg"),
                  ConfigError);
}

TEST_CASE("canonical string and hash identify the experiment") {
  const auto a = ExperimentConfig::from_string(kTorusConfig);
  auto b = a;
  CHECK(a.config_hash() == b.config_hash());
  b.threads = 13;
  b.output = "somewhere/else";
  CHECK(a.config_hash() == b.config_hash()); // presentation keys excluded
  b.master_seed = 1;
  CHECK(a.config_hash() != b.config_hash());
  CHECK(a.canonical_string().find("torus2") != std::string::npos);
}

TEST_CASE("pairwise sum is order-deterministic and accurate") {
  std::vector<double> v;
  double plain = 0.0;
  for (int i = 0; i < 10001; ++i) {
    v.push_back(std::sin(i) * 1e-3 + 1.0);
    plain += v.back();
  }
  const double p1 = pairwise_sum(v);
  const double p2 = pairwise_sum(v);
  CHECK(p1 == p2);
  CHECK(p1 == doctest::Approx(plain).epsilon(1e-12));
  const auto est = aggregate(v, 99);
  CHECK(est.n == 10001);
  CHECK(est.mean == doctest::Approx(plain / 10001).epsilon(1e-12));
  CHECK(est.stderr_val > 0.0);
}

TEST_CASE("serial reference and OpenMP runner agree bitwise") {
  const auto cfg = ExperimentConfig::from_string(kTorusConfig);
  const auto spec = cfg.build_space();
  const EstimatorContext ctx(spec, cfg.resolution);
  const auto serial = run_trials(cfg, spec, ctx, 0.4, cfg.samples, 0, false);
  const auto parallel = run_trials(cfg, spec, ctx, 0.4, cfg.samples, 0, true);
  CHECK(serial == parallel);
}

TEST_CASE("byte-identical reports across 1/4/16 threads") {
  auto cfg = ExperimentConfig::from_string(kTorusConfig);
  std::string first;
  for (int threads : {1, 4, 16}) {
    cfg.threads = threads;
    const auto reports = cmd_simulate(cfg);
    const auto json = reports_to_json(reports, cfg, false);
    if (first.empty()) first = json;
    else CHECK(json == first);
  }
  CHECK(first.find("\"all_pass\": true") != std::string::npos);
}

TEST_CASE("simulate compares against closed forms") {
  auto cfg = ExperimentConfig::from_string(kTorusConfig);
  cfg.samples = 400;
  const auto reports = cmd_simulate(cfg);
  REQUIRE(reports.size() == 2);
  for (const auto& rep : reports) {
    CHECK(rep.kind == ComparisonKind::Exact);
    CHECK(rep.pass);
    CHECK(rep.estimate.n == 400);
    CHECK(std::fabs(rep.estimate.mean - rep.closed_form.value) <=
          std::max(3.0 * rep.estimate.stderr_val, 1e-9));
  }
  // zero-variance cell: circle K={1} zero count is always exactly 2
  auto czero = ExperimentConfig::from_string(
      "manifold = circle\nspectrum = 1\nquantity = zeros\nsamples = "
      "50\nresolution = 32\n");
  const auto zrep = cmd_simulate(czero);
  REQUIRE(zrep.size() == 1);
  CHECK(zrep[0].estimate.stderr_val == 0.0);
  CHECK(zrep[0].estimate.mean == 2.0);
  CHECK(zrep[0].pass);
}

TEST_CASE("upper-bound and empirical-only comparisons") {
  auto cfg = ExperimentConfig::from_string(
      "manifold = sphere2\nspectrum = 1\nquantity = lp:4\nsamples = "
      "60\nresolution = 24\n");
  const auto rep = cmd_simulate(cfg);
  REQUIRE(rep.size() == 1);
  CHECK(rep[0].kind == ComparisonKind::UpperBound);
  CHECK(rep[0].closed_form.value ==
        doctest::Approx(std::sqrt(5.0 / M_E)).epsilon(1e-14));
  CHECK(rep[0].pass);

  cfg.power_a = 1.5; // in (1,2): no proven bound at finite dim
  const auto rep2 = cmd_simulate(cfg);
  CHECK(rep2[0].kind == ComparisonKind::EmpiricalOnly);
  CHECK(rep2[0].pass);

  cfg.power_a = 1.0; // the L^1 mean has the exact Gamma-ratio value
  const auto rep3 = cmd_simulate(cfg);
  CHECK(rep3[0].kind == ComparisonKind::Exact);
}

TEST_CASE("expect emits the closed-form table with limits") {
  const auto cfg = ExperimentConfig::from_string(
      "manifold = circle\nspectrum = 1,2,3,4,5\nquantity = zeros\nlevels = "
      "0\n");
  const auto rows = cmd_expect(cfg);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].formula == "level_measure");
  CHECK(rows[0].value == doctest::Approx(6.6332495807107996982).epsilon(1e-13));
  CHECK(rows[1].formula == "excursion_volume");
  CHECK(rows[1].value == doctest::Approx(M_PI).epsilon(1e-13)); // varpi/2
  CHECK(rows[2].formula == "leray");
  CHECK(!expect_to_text(rows).empty());
  CHECK(expect_to_json(rows).find("level_measure") != std::string::npos);
  CHECK(expect_to_csv(rows).find("excursion_volume") != std::string::npos);

  // gaussian-normalized table carries the law-specific rows
  const auto gcfg = ExperimentConfig::from_string(
      "manifold = torus2\nspectrum = (1,0)\nquantity = leray_shell\n"
      "distribution = gaussian_normalized\nlevels = 0\n");
  const auto grows = cmd_expect(gcfg);
  REQUIRE(grows.size() == 3);
  CHECK(grows[2].formula == "gauss_leray");
  CHECK(grows[2].value ==
        doctest::Approx(15.749609945722419744).epsilon(1e-13));
}

TEST_CASE("simulate with the gaussian-normalized law matches its closed form") {
  auto cfg = ExperimentConfig::from_string(
      "manifold = torus2\nspectrum = (1,0)\nquantity = excursion\n"
      "distribution = gaussian_normalized\nlevels = 0\nsamples = "
      "300\nresolution = 48\n");
  const auto rep = cmd_simulate(cfg);
  REQUIRE(rep.size() == 1);
  CHECK(rep[0].closed_form.value ==
        doctest::Approx(0.5 * 4.0 * M_PI * M_PI).epsilon(1e-13));
  CHECK(rep[0].pass);
}

TEST_CASE("radial law end to end") {
  // write a radial table approximating a box density on [0, 1]
  const std::string path = "radial_box_test.csv";
  {
    std::ofstream out(path);
    out << "# r,alpha\n";
    out << "0.0,1\n0.9999,1\n1.0,0\n1.5,0\n";
  }
  auto cfg = ExperimentConfig::from_string(
      "manifold = sphere2\nspectrum = 1\nquantity = excursion\n"
      "distribution = radial:" + path +
      "\nlevels = 0\nsamples = 200\nresolution = 32\n");
  const auto rep = cmd_simulate(cfg);
  REQUIRE(rep.size() == 1);
  CHECK(rep[0].closed_form.value ==
        doctest::Approx(0.5 * 4.0 * M_PI).epsilon(1e-8)); // symmetry at t=0
  CHECK(rep[0].pass);
  std::remove(path.c_str());
}

TEST_CASE("bounds report") {
  const auto cfg = ExperimentConfig::from_string(
      "manifold = sphere2\nspectrum = 1,2\nquantity = lp:2\nsamples = "
      "120\nresolution = 24\n");
  bool all_pass = false;
  const std::string report = cmd_bounds(cfg, all_pass);
  CHECK(all_pass);
  CHECK(report.find("lp a=2") != std::string::npos);
  CHECK(report.find("stirling sandwich") != std::string::npos);
  CHECK(report.find("lipschitz-ball") != std::string::npos);
  CHECK(report.find("PASS") != std::string::npos);
  CHECK(report.find("FAIL") == std::string::npos);
}

TEST_CASE("two-stage rule: a marginal first round reruns at 4x N") {
  // seed chosen so the first 120-trial round lands outside 3 SE and the
  // fresh 480-trial rerun settles it
  auto cfg = ExperimentConfig::from_string(
      "manifold = circle\nspectrum = 1,2,3\nquantity = zeros\nlevels = 0\n"
      "samples = 120\nresolution = 32\nmaster_seed = 7\n");
  const auto reports = cmd_simulate(cfg);
  REQUIRE(reports.size() == 1);
  CHECK(reports[0].retried);
  CHECK(reports[0].pass);
  CHECK(reports[0].estimate.n == 480);
}

TEST_CASE("ISOGEOM_THREADS is the fallback when threads = 0") {
  auto cfg = ExperimentConfig::from_string(kTorusConfig);
  cfg.threads = 5;
  CHECK(resolve_threads(cfg) == 5);
  cfg.threads = 0;
  setenv("ISOGEOM_THREADS", "3", 1);
  CHECK(resolve_threads(cfg) == 3);
  unsetenv("ISOGEOM_THREADS");
  CHECK(resolve_threads(cfg) >= 1);
}

TEST_CASE("failed trials are counted and skipped") {
  std::vector<double> vals = {1.0, std::nan(""), 3.0, std::nan(""), 5.0};
  const auto est = aggregate(vals, 1);
  CHECK(est.n == 3);
  CHECK(est.failed == 2);
  CHECK(est.mean == doctest::Approx(3.0));
}

TEST_CASE("csv schema") {
  auto cfg = ExperimentConfig::from_string(kTorusConfig);
  cfg.samples = 60;
  const auto reports = cmd_simulate(cfg);
  const auto csv = reports_to_csv(reports, cfg);
  CHECK(csv.rfind("config_hash,quantity,t_scaled,N,mean,stderr,closed_form,z,"
                  "verdict\n", 0) == 0);
  std::size_t rows = 0;
  for (char ch : csv)
    if (ch == '\n') ++rows;
  CHECK(rows == reports.size() + 1);
}
