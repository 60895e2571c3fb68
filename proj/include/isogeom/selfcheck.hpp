#pragma once

// Reduced-size invariant suites behind `isogeom selftest`. The full grids
// live in the unit tests; these runs are sized to finish in seconds while
// still tripping on any corrupted primitive (see the fault-injection build).

#include <string>
#include <vector>

namespace isogeom::selfcheck {

struct SuiteResult {
  std::string name;
  int checks = 0;
  int failures = 0;
  std::vector<std::string> messages; // first few failures

  bool ok() const { return failures == 0; }
};

SuiteResult specfun_suite();
SuiteResult manifold_suite();
SuiteResult closedform_suite();
SuiteResult sampling_suite();
SuiteResult estimator_suite();

std::vector<SuiteResult> run_all();

} // namespace isogeom::selfcheck
