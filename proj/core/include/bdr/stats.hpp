#pragma once

#include <cstdint>
#include <vector>

#include "bdr/distribution.hpp"

namespace bdr {

// Synthetic verification problem: squared loss h(x, xi) = (x - xi)^2 with a
// known discrete 1-D population, so the true optimum v(x0) = Var(P0) and the
// limiting variance are available in closed form.
struct SyntheticProblem {
  DiscreteDistribution p0;   // 1-D atoms
  double domain_lo = 0.0;    // Xi = [domain_lo, domain_hi] for the worst case
  double domain_hi = 1.0;
  double true_optimum = 0.0;     // v(x0) = Var(P0)
  double true_optimum_se = 0.0;  // 0: closed form
  double clt_variance = 0.0;     // V_v = Var_P0 (x0 - xi)^2

  static SyntheticProblem mean_estimation(const std::vector<double>& atoms,
                                          const std::vector<double>& weights,
                                          double domain_margin = 0.5);
};

struct BoundSpec {
  double sigma = 1.0;  // sub-Gaussian parameter
  double eta = 0.05;   // confidence level in (0,1)
};

// v_n + sqrt(-2 sigma^2 log(eta) / n)
double hoeffding_bound(double v_n, long n, const BoundSpec& spec);

// beta * v_rn + (1 - beta) * g_bound
double bdr_generalization_bound(double v_rn, double g_bound, double beta);

// ---- exact 1-D engine (squared loss, order-1 ball on an interval) ----

// Worst-case mean of (x - xi)^2 over the W1 ball of radius epsilon around the
// empirical distribution of xs, with mass relocations restricted to
// [lo, hi].  Solved exactly by a concave-frontier greedy; the result is
// always >= the empirical mean in floating point.
double worst_case_mean_sq_interval(const std::vector<double>& xs, double x, double epsilon,
                                   double lo, double hi);

struct BlendMinimum {
  double value = 0.0;
  double x_opt = 0.0;
};

// min over x in [lo, hi] of beta * worst-case + (1 - beta) * empirical mean.
BlendMinimum minimize_blend_1d(const std::vector<double>& xs, double beta, double epsilon,
                               double lo, double hi);

// Per-replication minima of the empirical, blended, and worst-case
// objectives, cross-evaluated so that saa <= bdr <= dro holds exactly in
// floating point.
struct FamilyMinima {
  double saa = 0.0;
  double bdr = 0.0;
  double dro = 0.0;
};
FamilyMinima family_minima(const std::vector<double>& xs, double beta, double epsilon,
                           double lo, double hi);

// Exact order-1 Wasserstein distance between a 1-D sample (uniform weights)
// and a discrete population (CDF area formula).
double w1_distance_1d(const std::vector<double>& sample, const DiscreteDistribution& p0);

// Twice the 95th percentile of W1(empirical_n, P0) over pilot_reps draws.
double pilot_epsilon(const SyntheticProblem& prob, int n, int pilot_reps, std::uint64_t seed);

// ---- experiments ----

struct BiasResult {
  double mean_bias = 0.0;
  double std_err = 0.0;
  int reps = 0;
  int failures = 0;
  std::vector<double> rep_values;  // min v_{b,n} per replication
};

// Monte-Carlo estimate of E[min_x v_{b,n}] - v(x0) over reps independent
// n-sample draws.  Throws when more than 1% of replications fail.
BiasResult bias_experiment(const SyntheticProblem& prob, int n, double beta, double epsilon,
                           int reps, std::uint64_t seed);

struct BetaSearchResult {
  double beta_star = 0.0;
  double bracket_lo = 0.0, bracket_hi = 1.0;  // final bisection bracket on beta
  double bias_at_star = 0.0;
  double std_err_at_star = 0.0;
};

// Bisection on beta with common random numbers until |mean bias| falls under
// tol_se_multiple standard errors.  Requires the bracket condition: bias < 0
// at beta=0 and > 0 at beta=1, each beyond tol_se_multiple standard errors;
// otherwise throws std::runtime_error ("no sign change").
BetaSearchResult find_unbiased_beta(const SyntheticProblem& prob, int n, double epsilon,
                                    int reps, double tol_se_multiple, std::uint64_t seed);

struct ConsistencyRow {
  int n = 0;
  double beta_n = 0.0;
  double mean_abs_err = 0.0;
  double std_err = 0.0;
  std::vector<double> rep_values;  // min v_{b,n} per replication
};

// Per n in the schedule: mean |min v_{b,n} - v(x0)| with beta_n = alpha /
// (alpha + n).
std::vector<ConsistencyRow> consistency_experiment(const SyntheticProblem& prob,
                                                   const std::vector<int>& n_schedule,
                                                   double alpha, double epsilon, int reps,
                                                   std::uint64_t seed);

struct CltResult {
  double ks_statistic = 0.0;
  double p_value = 0.0;
  std::vector<double> standardized;  // per-replication statistics
};

// Kolmogorov-Smirnov distance of sqrt(n) [v_{b,n}(x_hat) - v(x0)] / sqrt(V_v)
// against the standard normal, with beta_n = alpha/(alpha+n).  epsilon < 0
// selects the pilot rule.  Throws std::invalid_argument when V_v = 0.
CltResult clt_experiment(const SyntheticProblem& prob, int n, int reps, std::uint64_t seed,
                         double alpha = 1.0, double epsilon = -1.0);

// Asymptotic two-sided Kolmogorov p-value (Stephens' small-sample scaling).
double ks_p_value(double d_statistic, int sample_count);

// Standard normal CDF.
double normal_cdf(double z);

}  // namespace bdr
