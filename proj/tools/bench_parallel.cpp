// Benchmark: OpenMP trial runner vs the serial reference loop on the two
// heaviest estimators, verifying bit-identical per-trial output.

#include <omp.h>

#include <cstdio>
#include <string>

#include "isogeom/harness.hpp"

using namespace isogeom;

namespace {

void bench(const char* label, const ExperimentConfig& cfg) {
  const EigenspaceSpec spec = cfg.build_space();
  const EstimatorContext ctx(spec, cfg.resolution);

  const double t0 = omp_get_wtime();
  const auto serial = run_trials(cfg, spec, ctx, 0.0, cfg.samples, 0, false);
  const double t1 = omp_get_wtime();
  const auto parallel = run_trials(cfg, spec, ctx, 0.0, cfg.samples, 0, true);
  const double t2 = omp_get_wtime();

  const bool identical = serial == parallel;
  const double ts = t1 - t0, tp = t2 - t1;
  std::printf("%-28s n=%-6ld res=%-4d serial=%7.3fs omp=%7.3fs speedup=%.2fx  %s\n",
              label, cfg.samples, cfg.resolution, ts, tp, ts / tp,
              identical ? "bit-identical" : "MISMATCH");
  if (!identical) std::exit(1);
}

} // namespace

int main(int argc, char** argv) {
  long n = argc > 1 ? std::stol(argv[1]) : 400;
  std::printf("threads: %d\n", omp_get_max_threads());

  ExperimentConfig nodal;
  nodal.manifold = ManifoldId::Torus2;
  nodal.torus_generators = {{1, 0}};
  nodal.quantity = Quantity::LevelMeasure;
  nodal.samples = n;
  nodal.resolution = 128;
  nodal.master_seed = 7;
  bench("torus nodal length", nodal);

  ExperimentConfig sphere_exc;
  sphere_exc.manifold = ManifoldId::Sphere2;
  sphere_exc.sphere_degrees = {4};
  sphere_exc.quantity = Quantity::Excursion;
  sphere_exc.samples = n;
  sphere_exc.resolution = 128;
  sphere_exc.master_seed = 7;
  bench("sphere excursion volume", sphere_exc);

  ExperimentConfig common;
  common.manifold = ManifoldId::Torus2;
  common.torus_generators = {{1, 0}};
  common.quantity = Quantity::CommonZeros;
  common.samples = n / 2;
  common.resolution = 128;
  common.master_seed = 7;
  bench("torus common zeros", common);
  return 0;
}
