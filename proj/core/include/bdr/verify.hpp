#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace bdr {

// Property-suite machinery shared by the CLI verify subcommand and the
// acceptance harness.  Each suite runs seeded instances and records the
// failing cases.

struct SuiteFailure {
  std::uint64_t seed = 0;
  std::string detail;
};

struct SuiteReport {
  std::string suite;
  int instances = 0;
  double tolerance = 0.0;
  std::vector<SuiteFailure> failures;

  bool passed() const { return failures.empty(); }
};

// |primal - dual| <= tol on seeded random worst-case instances
// (centers with <= 5 atoms, grids <= 25 candidates containing the center
// atoms, losses in [0, 10], radii in [0, 2]).
SuiteReport run_duality_suite(int instances, double tol, std::uint64_t seed0 = 0);

// Worst-case support structure on the same instance family.
SuiteReport run_support_suite(int instances, double tol, std::uint64_t seed0 = 0);

// Equal-weight reformulation value against the primal LP on uniform-weight
// instances with a smooth loss.
SuiteReport run_equal_weight_suite(int instances, double tol, std::uint64_t seed0 = 0);

// Per-replication min v_n <= min v_{b,n} <= min v_{r,n}, exact in floating
// point, across the given betas with common random numbers.
SuiteReport run_ordering_suite(int replications, const std::vector<double>& betas,
                               std::uint64_t seed0 = 0);

// phi-divergence worst case against the fine simplex-grid search (n = 3).
SuiteReport run_phi_suite(int instances, double tol, std::uint64_t seed0 = 0);

// Mixture-expectation identity on random finite mixtures.
SuiteReport run_lemma1_suite(int instances, double tol, std::uint64_t seed0 = 0);

}  // namespace bdr
