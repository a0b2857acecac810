#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "bdr/distribution.hpp"
#include "bdr/lp.hpp"

namespace bdr {

// Ground metric d on the sample space.
class GroundMetric {
 public:
  static GroundMetric euclidean();
  // ||I_i - I_j||_inf + kappa * 1{Y_i != Y_j}
  static GroundMetric inf_norm_label_flip(double kappa);
  static GroundMetric custom(std::function<double(const SamplePoint&, const SamplePoint&)> fn);

  double operator()(const SamplePoint& a, const SamplePoint& b) const { return fn_(a, b); }

 private:
  explicit GroundMetric(std::function<double(const SamplePoint&, const SamplePoint&)> fn)
      : fn_(std::move(fn)) {}
  std::function<double(const SamplePoint&, const SamplePoint&)> fn_;
};

struct WassersteinBall {
  DiscreteDistribution center;
  double radius = 0.0;   // epsilon >= 0
  double order = 1.0;    // p >= 1
  GroundMetric metric = GroundMetric::euclidean();

  void validate() const;
};

// Nonnegative coupling with fixed marginals.
struct TransportPlan {
  Eigen::MatrixXd matrix;         // n x m
  Eigen::VectorXd row_marginal;   // source weights
  Eigen::VectorXd col_marginal;   // target weights

  void validate(double tol = 1e-9) const;
};

struct WorstCaseResult {
  double value = 0.0;
  DiscreteDistribution distribution;
  TransportPlan plan;
  double dual_lambda0 = 0.0;
  std::optional<Eigen::Index> split_atom_index;
  std::optional<double> split_fraction;  // q in [0,1]
};

// max_xi { h(xi) - lambda0 * d^p(xi, center_atom) } for the caller's Xi.
using InnerMaxFn = std::function<double(double lambda0, const SamplePoint& center_atom)>;

// Order-p Wasserstein distance solved as a transport LP; returns the distance
// and the optimal coupling.
std::pair<double, TransportPlan> wasserstein_distance(const DiscreteDistribution& a,
                                                      const DiscreteDistribution& b, double p,
                                                      const GroundMetric& metric);

// Worst-case expectation over the ball, maximized over couplings from the
// center to a finite candidate support (the transport LP with a cost budget).
WorstCaseResult worst_case_primal(const WassersteinBall& ball, const LossFn& h,
                                  const std::vector<SamplePoint>& candidate_atoms);

// Dual route: min over lambda0 >= lambda_min of
//   eps^p lambda0 + sum_i mu_i * inner_max(lambda0, xi_i),
// solved by golden-section search (the objective is convex in lambda0).
// Returns (value, minimizing lambda0).  lambda_max <= 0 means: bracket by
// doubling until the minimizer is interior.  lambda_min supports inner
// oracles that are finite only above a norm threshold.
std::pair<double, double> worst_case_dual(const WassersteinBall& ball, const LossFn& h,
                                          const InnerMaxFn& inner_max, double lambda_max = 0.0,
                                          double lambda_min = 0.0);

// Convenience dual with the inner maximization taken exactly over a finite
// grid; the lambda0 bracket comes from the observed growth rate on the grid.
std::pair<double, double> worst_case_dual_on_grid(const WassersteinBall& ball, const LossFn& h,
                                                  const std::vector<SamplePoint>& grid);

// Equal-weight reformulation for uniform centers: best per-atom relocation on
// the grid under the average-cost budget, relaxed to a transport LP with
// uniform rows.  Returns the value and one relocation per source atom.
std::pair<double, std::vector<SamplePoint>> worst_case_equal_weight(
    const WassersteinBall& ball, const LossFn& h, const std::vector<SamplePoint>& grid);

// Checks the worst-case support structure: at most n+1 atoms carry weight
// above tol and, judged from the plan, at most one center weight is split
// into a pair (the others transported whole).
bool verify_support_structure(const WorstCaseResult& result,
                              const DiscreteDistribution& center, double tol);

// Largest observed (h(a) - h(b)) / d^p(a, b) over probe pairs with d > 0; an
// empirical lower bound on the growth rate L.  nullopt when no pair has d > 0.
std::optional<double> growth_rate_check(
    const LossFn& h, const GroundMetric& metric, double p,
    const std::vector<std::pair<SamplePoint, SamplePoint>>& probes);

}  // namespace bdr
