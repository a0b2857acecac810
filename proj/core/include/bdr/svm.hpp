#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>

#include "bdr/distribution.hpp"
#include "bdr/lp.hpp"

namespace bdr {

// Binary classification instance with the robust-SVM hyperparameters.
struct SvmInstance {
  Eigen::MatrixXd features;  // n x l, rows I_i
  Eigen::VectorXi labels;    // entries in {-1, +1}
  double beta = 0.0;         // in [0, 1]
  double epsilon = 0.0;      // >= 0
  double kappa = 0.0;        // label-flip cost, >= 0

  Eigen::Index sample_count() const { return features.rows(); }
  Eigen::Index feature_count() const { return features.cols(); }
  void validate() const;
};

enum class SvmFormulation { PaperEq20, ExactEpigraph };

struct SvmModel {
  Eigen::VectorXd weights;   // x
  double lambda0 = 0.0;
  Eigen::VectorXd lambdas;   // per-sample multipliers (eq-20) / worst-case terms
  double objective = 0.0;
  SvmFormulation formulation = SvmFormulation::PaperEq20;
  double beta = 0.0, epsilon = 0.0, kappa = 0.0;

  std::string to_json() const;
  static SvmModel from_json(const std::string& text);
};

// max{1 - Y <x, I>, 0}; throws std::invalid_argument when the label is absent.
double hinge_loss(const Eigen::VectorXd& x, const SamplePoint& xi);

// ||I_i - I_j||_inf + kappa * 1{Y_i != Y_j}
double svm_metric(const SamplePoint& a, const SamplePoint& b, double kappa);

// Closed-form inner maximization for hinge loss under the flip metric:
// max over (I, Y) of [hinge(x, (I, Y)) - lambda0 * d((I, Y), atom)], equal to
// max(1 - Y<x,I>, 1 + Y<x,I> - kappa*lambda0, 0) when lambda0 >= ||x||_1 and
// +infinity below that threshold.
double hinge_inner_max(const Eigen::VectorXd& x, double lambda0, double kappa,
                       const SamplePoint& atom);

// The printed robust-SVM linear program: variables (x free, lambda_0..n >= 0,
// s >= 0), objective beta*eps*lambda0 + (1/n) sum lambda_i, margin rows,
// label-flip rows, the norm row sum s_j <= lambda0, and |x_j| <= s_j rows.
LinearProgram build_eq20_lp(const SvmInstance& inst);

// Epigraph form of the blended objective with the closed-form inner
// maximization for hinge loss under the inf-norm/label-flip metric:
//   min beta*(eps*lambda0 + (1/n) sum w_i) + ((1-beta)/n) sum e_i
//   w_i >= 1 - Y_i<x,I_i>, w_i >= 1 + Y_i<x,I_i> - kappa*lambda0, w_i >= 0,
//   e_i >= 1 - Y_i<x,I_i>, e_i >= 0, sum s_j <= lambda0, |x_j| <= s_j.
// Its optimum equals min_x of the exact blended objective.
LinearProgram build_exact_epigraph_lp(const SvmInstance& inst);

SvmModel train(const SvmInstance& inst, SvmFormulation formulation);

// sign(<x, I>) per row; zero scores map to +1.
Eigen::VectorXi predict(const SvmModel& model, const Eigen::MatrixXd& features);

double accuracy(const Eigen::VectorXi& predictions, const Eigen::VectorXi& truth);

// Re-solves the same training data over a family of (beta, epsilon) values,
// reusing the previous optimal basis: only objective coefficients change, so
// each re-solve starts primal feasible.
class SvmTrainer {
 public:
  SvmTrainer(SvmInstance inst, SvmFormulation formulation);
  ~SvmTrainer();
  SvmTrainer(SvmTrainer&&) noexcept;
  SvmTrainer& operator=(SvmTrainer&&) noexcept;

  SvmModel train_at(double beta, double epsilon);

 private:
  SvmInstance inst_;
  SvmFormulation formulation_;
  std::unique_ptr<SimplexSolver> solver_;
};

}  // namespace bdr
