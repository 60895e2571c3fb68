#pragma once

// Experiment orchestration: config parsing, seeded Monte Carlo runs with an
// OpenMP trial runner (and a serial reference runner producing identical
// output), deterministic aggregation, and machine-readable reports.

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <span>
#include <string>
#include <vector>

#include "isogeom/closedform.hpp"
#include "isogeom/estimators.hpp"
#include "isogeom/manifold.hpp"
#include "isogeom/sampling.hpp"

namespace isogeom {

enum class Distribution { UniformSphere, Gaussian, GaussianNormalized, Radial };
enum class Quantity {
  Zeros,
  LevelMeasure,
  Excursion,
  LerayShell,
  LerayCoarea,
  Lp,
  IntAbsPow,
  Sup,
  CommonZeros
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  ManifoldId manifold = ManifoldId::Circle;
  std::vector<int> circle_spectrum;
  std::vector<std::array<int, 2>> torus_generators;
  std::vector<int> sphere_degrees;

  Distribution distribution = Distribution::UniformSphere;
  double sigma = 1.0;            // gaussian law
  std::string radial_table;      // csv path (r,alpha rows) for the radial law

  Quantity quantity = Quantity::Excursion;
  double power_a = 2.0;          // lp / int_abs_pow order

  std::vector<double> levels{0.0}; // always t_scaled = level / c
  long samples = 1000;
  int resolution = 64;
  std::uint64_t master_seed = 1;
  double epsilon = 0.01;         // shell half-width, absolute level units
  int threads = 0;               // 0: ISOGEOM_THREADS env, else OpenMP default
  std::string output;            // report stem; empty = stdout only
  std::string format = "json";   // json | csv

  static ExperimentConfig from_file(const std::string& path);
  static ExperimentConfig from_string(const std::string& text);
  void validate() const;         // throws ConfigError
  EigenspaceSpec build_space() const;
  std::string canonical_string() const; // experiment identity (no output/threads)
  std::uint64_t config_hash() const;    // FNV-1a 64 of canonical_string
};

const char* quantity_name(Quantity q);
const char* distribution_name(Distribution d);

struct McEstimate {
  double mean = 0.0;
  double stderr_val = 0.0; // sample stddev / sqrt(n)
  long n = 0;              // successful trials
  long failed = 0;         // trials whose estimator raised (recorded as NaN)
  std::uint64_t master_seed = 0;
};

enum class ComparisonKind { Exact, UpperBound, EmpiricalOnly };

struct ComparisonReport {
  Quantity quantity = Quantity::Excursion;
  double t_scaled = 0.0;
  ClosedForm closed_form;
  ComparisonKind kind = ComparisonKind::Exact;
  McEstimate estimate;
  double z = 0.0;
  bool pass = true;
  bool retried = false;
  double runtime_seconds = 0.0;
};

// Fixed-shape pairwise tree sum: result depends only on the value vector,
// never on thread count or scheduling.
double pairwise_sum(std::span<const double> v);
McEstimate aggregate(std::span<const double> values, std::uint64_t seed);

// Per-trial values for trials [trial0, trial0 + n); bit-identical between
// the serial reference runner (parallel = false) and the OpenMP runner.
// A trial whose estimator raises is recorded as NaN; aggregate() counts and
// skips those, and cmd_simulate aborts when more than 1% of a level fails.
std::vector<double> run_trials(const ExperimentConfig& cfg,
                               const EigenspaceSpec& spec,
                               const EstimatorContext& ctx, double t_scaled,
                               long n, std::uint64_t trial0, bool parallel);

// One report per level. A failing exact/bound cell is rerun once with 4x N
// on fresh trial indices before the verdict is final.
std::vector<ComparisonReport> cmd_simulate(const ExperimentConfig& cfg);

struct ExpectRow {
  std::string formula;
  double t_scaled = 0.0;
  double value = 0.0;
  double asymptotic = 0.0; // dim->infinity limit at the same absolute level
};
std::vector<ExpectRow> cmd_expect(const ExperimentConfig& cfg);

// Bound checks (universal L^p bound, Gamma-ratio chain, Stirling sandwich,
// the Lipschitz-ball inequality, and the sup-norm bounds). Returns the text
// report; `all_pass` receives the verdict.
std::string cmd_bounds(const ExperimentConfig& cfg, bool& all_pass);

int cmd_selftest(std::ostream& os); // 0 iff every suite passes

std::string reports_to_json(std::span<const ComparisonReport> reports,
                            const ExperimentConfig& cfg, bool include_runtime);
std::string reports_to_csv(std::span<const ComparisonReport> reports,
                           const ExperimentConfig& cfg);
std::string expect_to_text(std::span<const ExpectRow> rows);
std::string expect_to_json(std::span<const ExpectRow> rows);
std::string expect_to_csv(std::span<const ExpectRow> rows);

int resolve_threads(const ExperimentConfig& cfg);

} // namespace isogeom
