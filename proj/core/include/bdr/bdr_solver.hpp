#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <vector>

#include "bdr/distribution.hpp"
#include "bdr/wasserstein.hpp"

namespace bdr {

// Loss oracle h(x, xi) with an optional subgradient in x.
struct LossOracle {
  std::function<double(const Eigen::VectorXd& x, const SamplePoint& xi)> evaluate;
  std::function<Eigen::VectorXd(const Eigen::VectorXd& x, const SamplePoint& xi)> subgradient_x;
  bool convex_in_x = false;
};

enum class InnerMode { PrimalLp, DualSearch, EqualWeight };

struct BdrSolverConfig {
  double rel_tol = 1e-6;
  int max_outer = 200;
  int x_steps_per_outer = 50;
  double step_a = 1.0;   // subgradient step a/(k+b)
  double step_b = 10.0;
  InnerMode inner_mode = InnerMode::PrimalLp;
  double lambda0_bracket = 0.0;  // 0: automatic
  Eigen::VectorXd box_lower, box_upper;  // projection box for x (defaults +-1e3)
};

// Reads the solver keys {rel_tol, max_outer, lambda0_bracket, inner_mode}
// from a JSON object text; missing keys keep their defaults.  Throws
// std::invalid_argument on an unknown inner_mode.
BdrSolverConfig solver_config_from_json(const std::string& json_text);

// The blended worst-case/empirical problem: loss, training sample, the blend
// weight beta, and the ball around the empirical (or prior) center.
struct BdrProblem {
  LossOracle loss;
  std::vector<SamplePoint> samples;
  double beta = 0.0;
  WassersteinBall ball;
  int decision_dim = 1;
  std::vector<SamplePoint> candidate_grid;
  // Optional closed-form inner maximization over the continuum:
  // (x, lambda0, center atom) -> max_xi [h(x, xi) - lambda0 d^p(xi, atom)].
  std::function<double(const Eigen::VectorXd&, double, const SamplePoint&)> inner_max;

  void validate() const;
  // Ball centered at the empirical distribution of the samples.
  static BdrProblem data_driven(LossOracle loss, std::vector<SamplePoint> samples, double beta,
                                double epsilon, double order, GroundMetric metric,
                                int decision_dim);
};

struct BdrObjectiveValue {
  double value = 0.0;
  double dro_part = 0.0;  // worst case over the ball at x
  double saa_part = 0.0;  // empirical mean loss at x
};

struct BdrSolution {
  Eigen::VectorXd x_opt;
  double value = 0.0;
  double dro_part = 0.0;
  double saa_part = 0.0;
  double lambda0 = 0.0;
  int iterations = 0;
  bool converged = false;
};

// beta * (worst case) + (1 - beta) * (empirical mean) at x.
BdrObjectiveValue bdr_objective(const BdrProblem& prob, const Eigen::VectorXd& x,
                                const BdrSolverConfig& cfg = {});

// The regularized reading of the blend for beta < 1:
// lambda_n = beta/(1-beta) and f(x) the worst-case cost, so that
// saa + lambda_n * f(x) = value / (1 - beta).
std::pair<double, double> regularized_form(const BdrProblem& prob, const Eigen::VectorXd& x,
                                           const BdrSolverConfig& cfg = {});

// Alternating minimization: worst-case distribution at fixed x, then
// projected subgradient steps on the blended objective with that
// distribution frozen.  Requires a convex loss with a subgradient.
BdrSolution solve_bdr_coordinate_descent(const BdrProblem& prob, const Eigen::VectorXd& x0,
                                         const BdrSolverConfig& cfg = {});

// beta eps^p lambda0 + (beta/n) sum_i max_xi[h - lambda0 d^p] +
// ((1-beta)/n) sum_i h(x, xi_i).
double bdr_dual_objective(const BdrProblem& prob, const Eigen::VectorXd& x, double lambda0,
                          const BdrSolverConfig& cfg = {});

}  // namespace bdr
