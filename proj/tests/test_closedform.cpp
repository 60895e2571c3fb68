#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "isogeom/closedform.hpp"
#include "isogeom/manifold.hpp"
#include "isogeom/specfun.hpp"

using namespace isogeom;

TEST_CASE("level measure (nodal / level expectations)") {
  // circle K = {1..n}: the zero-count expectation 2 sqrt(sum k^2 / n)
  for (int n : {1, 5, 20}) {
    std::vector<int> ks;
    double sum = 0.0;
    for (int k = 1; k <= n; ++k) {
      ks.push_back(k);
      sum += static_cast<double>(k) * k;
    }
    const auto spec = make_circle_space(ks);
    CHECK(expected_level_measure(spec, 0.0).value ==
          doctest::Approx(2.0 * std::sqrt(sum / n)).epsilon(1e-13));
  }
  CHECK(expected_level_measure(make_circle_space({1, 2, 3, 4, 5}), 0.0).value ==
        doctest::Approx(6.6332495807107996982).epsilon(1e-13));
  // sphere degree 4 at t = 0: 2 pi sqrt(10)
  CHECK(expected_level_measure(make_sphere_space({4}), 0.0).value ==
        doctest::Approx(19.869176531592202469).epsilon(1e-13));
  // torus orbit (1,0) at t = 0: 2 pi^2 / sqrt(2)
  const auto torus = make_torus_space({{1, 0}});
  CHECK(expected_level_measure(torus, 0.0).value ==
        doctest::Approx(13.957728399277759068).epsilon(1e-13));
  // |t| = 1 collapses for d > 1; out of range rejected
  CHECK(expected_level_measure(torus, 1.0).value == 0.0);
  CHECK(expected_level_measure(torus, -1.0).value == 0.0);
  CHECK_THROWS_AS(expected_level_measure(torus, 1.2), std::invalid_argument);
  // d = 1: the (1-t^2)^0 factor stays 1 even at |t| = 1
  CHECK(expected_level_measure(make_circle_space({1}), 1.0).value ==
        doctest::Approx(2.0).epsilon(1e-13));
}

TEST_CASE("excursion volume") {
  const auto sphere = make_sphere_space({1});
  const double vol = 4.0 * M_PI;
  CHECK(expected_excursion_volume(sphere, 0.0).value ==
        doctest::Approx(0.5 * vol).epsilon(1e-14));
  CHECK(expected_excursion_volume(sphere, -1.0).value ==
        doctest::Approx(vol).epsilon(1e-14));
  CHECK(expected_excursion_volume(sphere, -5.0).value ==
        doctest::Approx(vol).epsilon(1e-14)); // clamped
  CHECK(expected_excursion_volume(sphere, 1.0).value == 0.0);
  CHECK(expected_excursion_volume(sphere, 0.5).value ==
        doctest::Approx(M_PI).epsilon(1e-13));
  // t = 0 is varpi/2 for every model
  for (const EigenspaceSpec& spec :
       {make_circle_space({3}), make_torus_space({{2, 1}}),
        make_sphere_space({5})})
    CHECK(expected_excursion_volume(spec, 0.0).value ==
          doctest::Approx(0.5 * spec.manifold->total_volume).epsilon(1e-13));
}

TEST_CASE("intersection formulas") {
  const auto torus = make_torus_space({{1, 0}});
  const EigenspaceSpec* pair[2] = {&torus, &torus};
  const double zeros[2] = {0.0, 0.0};
  // two independent orbit-(1,0) fields: expected common zeros = pi
  CHECK(expected_intersection_measure(pair, zeros).value ==
        doctest::Approx(M_PI).epsilon(1e-13));
  const auto sphere = make_sphere_space({1});
  const EigenspaceSpec* spair[2] = {&sphere, &sphere};
  CHECK(expected_intersection_measure(spair, zeros).value ==
        doctest::Approx(2.0).epsilon(1e-13));
  // l = 1 goes through the same code path as the level measure, bit-equal
  const EigenspaceSpec* one[1] = {&torus};
  const double t1[1] = {0.37};
  CHECK(expected_intersection_measure(one, t1).value ==
        expected_level_measure(torus, 0.37).value);
  // l > m rejected
  const EigenspaceSpec* three[3] = {&torus, &torus, &torus};
  const double t3[3] = {0.0, 0.0, 0.0};
  CHECK_THROWS_AS(expected_intersection_measure(three, t3),
                  std::invalid_argument);
  // circle l = 1 = m gives the h^0 count
  const auto circle = make_circle_space({1, 2, 3, 4, 5});
  const EigenspaceSpec* cone[1] = {&circle};
  const double ct[1] = {0.0};
  CHECK(expected_intersection_measure(cone, ct).value ==
        doctest::Approx(6.6332495807107996982).epsilon(1e-13));

  // excursion intersections
  const double vol = torus.manifold->total_volume;
  CHECK(expected_intersection_excursion(one, ct).value ==
        doctest::Approx(0.5 * vol).epsilon(1e-13));
  CHECK(expected_intersection_excursion(pair, zeros).value ==
        doctest::Approx(0.25 * vol).epsilon(1e-13));
  const double tneg[3] = {-1.0, -1.0, -1.0};
  CHECK(expected_intersection_excursion(three, tneg).value ==
        doctest::Approx(vol).epsilon(1e-13));
}

TEST_CASE("Leray expectation") {
  const auto torus = make_torus_space({{1, 0}}); // d = 3
  CHECK(expected_leray(torus, 0.0).value ==
        doctest::Approx(4.0 * M_PI).epsilon(1e-13));
  const auto sphere = make_sphere_space({1}); // d = 2
  CHECK(expected_leray(sphere, 0.0).value ==
        doctest::Approx(3.6275987284684357012).epsilon(1e-13));
  // d = 2 stays finite at |t| = 1; d = 1 diverges (+inf, not an error)
  CHECK(std::isfinite(expected_leray(sphere, 1.0).value));
  const auto circle = make_circle_space({1}); // d = 1
  CHECK(std::isinf(expected_leray(circle, 1.0).value));
  CHECK_THROWS_AS(expected_leray(circle, 1.5), std::invalid_argument);
  // large-d limit at t=0 approaches varpi / sqrt(2 pi)
  std::vector<int> big;
  for (int k = 1; k <= 400; ++k) big.push_back(k);
  const auto huge = make_circle_space(big);
  CHECK(expected_leray(huge, 0.0).value ==
        doctest::Approx(2.0 * M_PI / std::sqrt(2.0 * M_PI)).epsilon(2e-3));
}

TEST_CASE("derivative identity: Leray = -d/dtau excursion") {
  // d in {2, 3, 5, 20}: sphere{1}, torus(1,0), circle{1,2,3}, sphere{10}
  const auto d2 = make_sphere_space({1});
  const auto d3 = make_torus_space({{1, 0}});
  const auto d5 = make_circle_space({1, 2, 3});
  const auto d20 = make_sphere_space({10});
  for (const EigenspaceSpec* spec : {&d2, &d3, &d5, &d20}) {
    for (double t = -0.9; t <= 0.9001; t += 0.1) {
      const double h = 1e-6 * spec->c;
      const double fd = -(expected_excursion_volume(*spec, (t * spec->c + h) / spec->c).value -
                          expected_excursion_volume(*spec, (t * spec->c - h) / spec->c).value) /
                        (2.0 * h);
      const double want = expected_leray(*spec, t).value;
      REQUIRE(std::fabs(fd - want) <= 1e-7 * std::max(1.0, std::fabs(want)));
    }
  }
}

TEST_CASE("integral functional under the probability-measure convention") {
  for (const EigenspaceSpec& spec :
       {make_circle_space({1}), make_torus_space({{1, 0}}),
        make_sphere_space({2})}) {
    CHECK(expected_integral_functional(spec, [](double) { return 1.0; }).value ==
          doctest::Approx(1.0).epsilon(1e-11));
    CHECK(expected_integral_functional(spec, [](double t) { return t * t; }).value ==
          doctest::Approx(1.0).epsilon(1e-10));
    CHECK(expected_integral_functional(
              spec, [](double t) { return std::fabs(t); })
              .value ==
          doctest::Approx(moment_formula(1.0, spec.d)).epsilon(1e-10));
  }
}

TEST_CASE("moment formula E(a, d)") {
  CHECK(std::fabs(moment_formula(1.0, 1) - 0.90031631615710606956) <= 1e-14);
  CHECK(moment_formula(2.0, 17) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(moment_formula(0.0, 9) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(moment_formula(3.0, 7) ==
        doctest::Approx(1.4633712821347247861).epsilon(1e-14));
  CHECK(moment_formula(0.5, 5) ==
        doctest::Approx(0.84891274251166950325).epsilon(1e-14));
  CHECK(moment_formula(6.0, 2) ==
        doctest::Approx(27.0 / 7.0).epsilon(1e-14));
  CHECK_THROWS_AS(moment_formula(-1.0, 5), std::domain_error);
  // limits
  CHECK(moment_limit(1.0) ==
        doctest::Approx(0.79788456080286535588).epsilon(1e-14));
  CHECK(std::fabs(moment_formula(1.0, 1000000) - moment_limit(1.0)) <= 1e-3);
  CHECK(std::fabs(moment_formula(3.0, 1000000) - moment_limit(3.0)) <= 1e-3);
  // monotonicity in d (via the Gamma-ratio monotonicity)
  for (int d = 1; d < 200; ++d) {
    REQUIRE(moment_formula(3.0, d + 1) > moment_formula(3.0, d));
    REQUIRE(moment_formula(1.0, d + 1) < moment_formula(1.0, d));
    REQUIRE(moment_formula(-0.5, d + 1) > moment_formula(-0.5, d));
  }
  // bounded by the limit on the proven side
  for (int d : {1, 2, 5, 50})
    CHECK(moment_formula(3.0, d) < moment_limit(3.0));
}

TEST_CASE("functional quadrature reproduces E(a, d) to 1e-10") {
  auto spec_for_d = [](int d) -> EigenspaceSpec {
    switch (d) {
      case 1: return make_circle_space({1});
      case 2: return make_sphere_space({1});
      case 5: return make_circle_space({1, 2, 3});
      case 20: return make_sphere_space({10});
      default: { // d = 100: circle with 50 frequencies, dim 100... d = 99; use 101
        std::vector<int> ks;
        for (int k = 1; k <= 50; ++k) ks.push_back(k);
        return make_circle_space(ks); // dim 100, d = 99
      }
    }
  };
  for (int d : {1, 2, 5, 20}) {
    const auto spec = spec_for_d(d);
    REQUIRE(spec.d == d);
    for (double a : {0.5, 1.0, 3.0, 6.0}) {
      const double got =
          expected_integral_functional(
              spec, [a](double t) { return std::pow(std::fabs(t), a); })
              .value;
      const double want = moment_formula(a, d);
      REQUIRE(std::fabs(got - want) <= 1e-10 * want);
    }
  }
  // d = 99 stands in for the large-d cell
  const auto big = spec_for_d(100);
  for (double a : {0.5, 1.0, 3.0, 6.0}) {
    const double got =
        expected_integral_functional(
            big, [a](double t) { return std::pow(std::fabs(t), a); })
            .value;
    REQUIRE(std::fabs(got - moment_formula(a, big.d)) <=
            1e-10 * moment_formula(a, big.d));
  }
}

TEST_CASE("L^p mean bounds") {
  const auto b2 = lp_mean_bound(2.0);
  CHECK(b2.universal == doctest::Approx(1.0505419189705506296).epsilon(1e-14));
  const auto b4 = lp_mean_bound(4.0);
  CHECK(b4.universal == doctest::Approx(1.3562437855552413951).epsilon(1e-14));
  const auto b8 = lp_mean_bound(8.0);
  CHECK(b8.universal == doctest::Approx(1.8195919791379002708).epsilon(1e-14));
  for (double a : {1.0, 2.0, 4.0, 8.0, 32.0}) {
    const auto b = lp_mean_bound(a);
    CHECK(b.asymptotic < b.universal);
    // the lower half of the Gamma-ratio chain
    CHECK(std::pow(2.0 / M_E, 0.5 / a) * b.universal < b.asymptotic);
  }
  CHECK_THROWS_AS(lp_mean_bound(0.5), std::domain_error);
}

TEST_CASE("sup mean bound") {
  std::vector<int> ks;
  for (int k = 1; k <= 20; ++k) ks.push_back(k);
  const auto circle20 = make_circle_space(ks);
  const auto sb = sup_mean_bound(circle20, 0.1);
  const double kappa = std::sqrt(40.0) * std::sqrt(143.5);
  CHECK(circle20.kappa == doctest::Approx(kappa).epsilon(1e-13));
  CHECK(sb.log_bound ==
        doctest::Approx((std::exp(0.5) + 0.1) * std::sqrt(std::log(kappa)))
            .epsilon(1e-13));
  CHECK(sb.trivial_c == doctest::Approx(std::sqrt(40.0)).epsilon(1e-14));
  CHECK(sb.informative);
  // sphere degree 1: e^{3/2} sqrt(ln sqrt(3)) exceeds c = sqrt(3)
  const auto s1 = make_sphere_space({1});
  CHECK_FALSE(sup_mean_bound(s1, 0.1).informative);
}

TEST_CASE("gaussian expectations") {
  const auto torus = make_torus_space({{1, 0}});
  const double vol = torus.manifold->total_volume;
  // sigma c = sqrt(2): Leray at t=0 equals varpi / sqrt(2 pi), any E
  const double sigma = M_SQRT2 / torus.c;
  const auto g = gaussian_expectations(torus, sigma, 0.0);
  CHECK(g.leray.value == doctest::Approx(15.749609945722419744).epsilon(1e-13));
  CHECK(g.excursion.value == doctest::Approx(0.5 * vol).epsilon(1e-13));
  CHECK(g.level.value ==
        doctest::Approx(expected_level_measure(torus, 0.0).value).epsilon(1e-13));
  // excursion complement symmetry in t
  const auto gp = gaussian_expectations(torus, 0.7, 0.45);
  const auto gm = gaussian_expectations(torus, 0.7, -0.45);
  CHECK(gp.excursion.value + gm.excursion.value ==
        doctest::Approx(vol).epsilon(1e-12));
  CHECK_THROWS_AS(gaussian_expectations(torus, 0.0, 0.0), std::domain_error);
}

TEST_CASE("radial expectations specialize correctly") {
  const auto specs = {make_circle_space({1, 2}), make_torus_space({{1, 0}}),
                      make_sphere_space({1})};
  for (const auto& spec : specs) {
    for (double sigma : {0.5, 1.0, 2.0}) {
      RadialDensity gauss(
          [sigma](double r) { return std::exp(-r * r / (sigma * sigma)); });
      for (double t : {0.0, 0.4, 1.2}) {
        const auto want = gaussian_expectations(spec, sigma, t);
        const auto got = radial_expectations(spec, gauss, t);
        REQUIRE(std::fabs(got.level.value - want.level.value) <=
                1e-8 * std::max(1.0, want.level.value));
        REQUIRE(std::fabs(got.excursion.value - want.excursion.value) <=
                1e-8 * std::max(1.0, want.excursion.value));
        REQUIRE(std::fabs(got.leray.value - want.leray.value) <=
                1e-8 * std::max(1.0, want.leray.value));
      }
    }
  }
  // a narrow bump at r = 1 approximates the uniform-sphere law
  const auto sphere = make_sphere_space({1});
  RadialDensity spike(
      [](double r) { return std::fabs(r - 1.0) <= 1e-4 ? 1.0 : 0.0; }, 1.3);
  for (double t : {0.0, 0.3, 0.7}) {
    const auto got = radial_expectations(sphere, spike, t);
    CHECK(std::fabs(got.level.value - expected_level_measure(sphere, t).value) <=
          1e-3 * std::max(1.0, got.level.value));
    CHECK(std::fabs(got.excursion.value -
                    expected_excursion_volume(sphere, t).value) <=
          1e-3 * std::max(1.0, got.excursion.value));
    CHECK(std::fabs(got.leray.value - expected_leray(sphere, t).value) <=
          1e-3 * std::max(1.0, got.leray.value));
  }
  // t = 0 excursion is half of the t = -inf value (the whole manifold)
  RadialDensity gauss1([](double r) { return std::exp(-r * r); });
  const auto at0 = radial_expectations(sphere, gauss1, 0.0);
  CHECK(at0.excursion.value ==
        doctest::Approx(0.5 * sphere.manifold->total_volume).epsilon(1e-10));
}

TEST_CASE("asymptotic limits") {
  const auto& sphere = ManifoldModel::sphere2();
  const auto lim0 = asymptotic_limits(0.0, sphere);
  CHECK(lim0.leray == doctest::Approx(4.0 * M_PI / std::sqrt(2.0 * M_PI))
                          .epsilon(1e-14));
  CHECK(lim0.excursion == doctest::Approx(2.0 * M_PI).epsilon(1e-14));
  CHECK(lim0.level_per_s ==
        doctest::Approx(0.5 * 4.0 * M_PI).epsilon(1e-14));
  // the Gaussian-weight functional: f = |t| gives sqrt(2/pi)
  CHECK(asymptotic_functional([](double t) { return std::fabs(t); }) ==
        doctest::Approx(0.79788456080286535588).epsilon(1e-11));
  CHECK(asymptotic_functional([](double) { return 1.0; }) ==
        doctest::Approx(1.0).epsilon(1e-11));
}

TEST_CASE("closed forms depend on blocks only through the alpha-mean") {
  // split one block into two with the same lambda: derived constants and all
  // closed forms are unchanged
  const auto base = make_circle_space({2, 3});
  EigenspaceSpec split = base;
  const SpectralBlock original = split.blocks[1]; // lambda = 9, dim 2
  split.blocks[1].dim = 1;
  SpectralBlock extra = original;
  extra.dim = 1;
  extra.offset = original.offset + 1;
  split.blocks.push_back(extra);
  double trace = 0.0;
  int dim = 0;
  for (const auto& blk : split.blocks) {
    trace += blk.dim * blk.lambda;
    dim += blk.dim;
  }
  CHECK(dim == base.dim_e);
  split.s = std::sqrt(trace / (split.manifold->m * dim));
  CHECK(split.s == doctest::Approx(base.s).epsilon(1e-15));
  for (double t : {0.0, 0.3, 0.8}) {
    CHECK(expected_level_measure(split, t).value ==
          expected_level_measure(base, t).value);
    CHECK(expected_excursion_volume(split, t).value ==
          expected_excursion_volume(base, t).value);
    CHECK(expected_leray(split, t).value == expected_leray(base, t).value);
  }
}

TEST_CASE("level unit conversion helpers") {
  const auto spec = make_sphere_space({4}); // c = 3
  CHECK(absolute_level(spec, 0.5) == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(scaled_level(spec, absolute_level(spec, 0.37)) ==
        doctest::Approx(0.37).epsilon(1e-15));
}

TEST_CASE("closed-form records recompute bit-for-bit") {
  const auto torus = make_torus_space({{1, 0}});
  const auto sphere = make_sphere_space({2});
  std::vector<ClosedForm> forms = {
      expected_level_measure(torus, 0.35),
      expected_excursion_volume(sphere, -0.2),
      expected_leray(torus, 0.6),
      gaussian_expectations(sphere, 0.8, 0.3).level,
      gaussian_expectations(sphere, 0.8, 0.3).excursion,
      gaussian_expectations(sphere, 0.8, 0.3).leray,
  };
  const EigenspaceSpec* pair[2] = {&torus, &torus};
  const double ts[2] = {0.1, 0.5};
  forms.push_back(expected_intersection_measure(pair, ts));
  forms.push_back(expected_intersection_excursion(pair, ts));
  for (const auto& cf : forms) {
    REQUIRE(recomputable(cf.id));
    CHECK(recompute(cf) == cf.value); // bitwise
    CHECK(cf.to_json().find("value") != std::string::npos);
    CHECK(!cf.to_csv_row().empty());
  }
  const auto quad = expected_integral_functional(
      torus, [](double t) { return t * t; });
  CHECK_FALSE(recomputable(quad.id));
  CHECK_THROWS_AS(recompute(quad), std::invalid_argument);
}
