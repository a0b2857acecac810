#include "bdr/bdr_solver.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <stdexcept>

namespace bdr {

void BdrProblem::validate() const {
  if (!loss.evaluate) throw std::invalid_argument("BdrProblem: missing loss oracle");
  if (samples.empty()) throw std::invalid_argument("BdrProblem: empty sample list");
  if (beta < 0.0 || beta > 1.0) throw std::invalid_argument("BdrProblem: beta outside [0,1]");
  if (decision_dim < 1) throw std::invalid_argument("BdrProblem: decision_dim must be >= 1");
  ball.validate();
}

BdrSolverConfig solver_config_from_json(const std::string& json_text) {
  const nlohmann::json j = nlohmann::json::parse(json_text);
  BdrSolverConfig cfg;
  if (j.contains("rel_tol")) cfg.rel_tol = j.at("rel_tol").get<double>();
  if (j.contains("max_outer")) cfg.max_outer = j.at("max_outer").get<int>();
  if (j.contains("lambda0_bracket")) cfg.lambda0_bracket = j.at("lambda0_bracket").get<double>();
  if (j.contains("inner_mode")) {
    const std::string mode = j.at("inner_mode").get<std::string>();
    if (mode == "primal_lp") {
      cfg.inner_mode = InnerMode::PrimalLp;
    } else if (mode == "dual_search") {
      cfg.inner_mode = InnerMode::DualSearch;
    } else if (mode == "equal_weight") {
      cfg.inner_mode = InnerMode::EqualWeight;
    } else {
      throw std::invalid_argument("solver_config_from_json: unknown inner_mode '" + mode + "'");
    }
  }
  return cfg;
}

BdrProblem BdrProblem::data_driven(LossOracle loss, std::vector<SamplePoint> samples,
                                   double beta, double epsilon, double order,
                                   GroundMetric metric, int decision_dim) {
  BdrProblem prob;
  prob.loss = std::move(loss);
  prob.ball.center = empirical_from_samples(samples);
  prob.samples = std::move(samples);
  prob.beta = beta;
  prob.ball.radius = epsilon;
  prob.ball.order = order;
  prob.ball.metric = std::move(metric);
  prob.decision_dim = decision_dim;
  return prob;
}

namespace {

LossFn bind_loss(const BdrProblem& prob, const Eigen::VectorXd& x) {
  return [&prob, x](const SamplePoint& xi) { return prob.loss.evaluate(x, xi); };
}

double worst_case_value(const BdrProblem& prob, const Eigen::VectorXd& x,
                        const BdrSolverConfig& cfg, double* lambda0_out) {
  const LossFn h = bind_loss(prob, x);
  if (prob.ball.radius == 0.0) {
    if (lambda0_out) *lambda0_out = kInf;
    return expectation(prob.ball.center, h);
  }
  switch (cfg.inner_mode) {
    case InnerMode::PrimalLp: {
      if (prob.candidate_grid.empty()) {
        throw std::invalid_argument("bdr: primal inner mode requires a candidate grid");
      }
      const WorstCaseResult r = worst_case_primal(prob.ball, h, prob.candidate_grid);
      if (lambda0_out) *lambda0_out = r.dual_lambda0;
      return r.value;
    }
    case InnerMode::DualSearch: {
      std::pair<double, double> vd;
      if (prob.inner_max) {
        const auto inner = [&](double l0, const SamplePoint& atom) {
          return prob.inner_max(x, l0, atom);
        };
        vd = worst_case_dual(prob.ball, h, inner, cfg.lambda0_bracket);
      } else if (!prob.candidate_grid.empty()) {
        vd = worst_case_dual_on_grid(prob.ball, h, prob.candidate_grid);
      } else {
        throw std::invalid_argument("bdr: dual inner mode requires a grid or inner oracle");
      }
      if (lambda0_out) *lambda0_out = vd.second;
      return vd.first;
    }
    case InnerMode::EqualWeight: {
      if (prob.candidate_grid.empty()) {
        throw std::invalid_argument("bdr: equal-weight inner mode requires a candidate grid");
      }
      const auto [v, relocations] = worst_case_equal_weight(prob.ball, h, prob.candidate_grid);
      (void)relocations;
      if (lambda0_out) *lambda0_out = 0.0;
      return v;
    }
  }
  throw std::logic_error("bdr: unknown inner mode");
}

}  // namespace

BdrObjectiveValue bdr_objective(const BdrProblem& prob, const Eigen::VectorXd& x,
                                const BdrSolverConfig& cfg) {
  prob.validate();
  if (x.size() != prob.decision_dim) {
    throw std::invalid_argument("bdr_objective: x has wrong dimension");
  }
  BdrObjectiveValue out;
  const DiscreteDistribution empirical = empirical_from_samples(prob.samples);
  out.saa_part = expectation(empirical, bind_loss(prob, x));
  out.dro_part = worst_case_value(prob, x, cfg, nullptr);
  out.value = prob.beta * out.dro_part + (1.0 - prob.beta) * out.saa_part;
  return out;
}

std::pair<double, double> regularized_form(const BdrProblem& prob, const Eigen::VectorXd& x,
                                           const BdrSolverConfig& cfg) {
  if (prob.beta >= 1.0) {
    throw std::invalid_argument("regularized_form: undefined at beta = 1");
  }
  const double lambda_n = prob.beta / (1.0 - prob.beta);
  const double f_of_x = worst_case_value(prob, x, cfg, nullptr);
  return {lambda_n, f_of_x};
}

double bdr_dual_objective(const BdrProblem& prob, const Eigen::VectorXd& x, double lambda0,
                          const BdrSolverConfig& cfg) {
  prob.validate();
  if (lambda0 < 0.0) throw std::invalid_argument("bdr_dual_objective: lambda0 must be >= 0");
  const DiscreteDistribution empirical = empirical_from_samples(prob.samples);
  const double saa = expectation(empirical, bind_loss(prob, x));
  if (prob.beta == 0.0) return saa;

  const double eps_p = std::pow(prob.ball.radius, prob.ball.order);
  double dro = eps_p * lambda0;
  const Eigen::Index n = prob.ball.center.size();
  if (prob.inner_max) {
    for (Eigen::Index i = 0; i < n; ++i) {
      dro += prob.ball.center.weights(i) *
             prob.inner_max(x, lambda0, prob.ball.center.atoms[static_cast<std::size_t>(i)]);
    }
  } else if (!prob.candidate_grid.empty()) {
    const LossFn h = bind_loss(prob, x);
    std::vector<double> hv(prob.candidate_grid.size());
    for (std::size_t j = 0; j < hv.size(); ++j) hv[j] = h(prob.candidate_grid[j]);
    for (Eigen::Index i = 0; i < n; ++i) {
      double inner = -kInf;
      for (std::size_t j = 0; j < hv.size(); ++j) {
        const double d = prob.ball.metric(prob.ball.center.atoms[static_cast<std::size_t>(i)],
                                          prob.candidate_grid[j]);
        inner = std::max(inner, hv[j] - lambda0 * std::pow(d, prob.ball.order));
      }
      dro += prob.ball.center.weights(i) * inner;
    }
  } else {
    throw std::invalid_argument("bdr_dual_objective: requires a grid or inner oracle");
  }
  (void)cfg;
  return prob.beta * dro + (1.0 - prob.beta) * saa;
}

BdrSolution solve_bdr_coordinate_descent(const BdrProblem& prob, const Eigen::VectorXd& x0,
                                         const BdrSolverConfig& cfg) {
  prob.validate();
  if (!prob.loss.convex_in_x) {
    throw std::invalid_argument(
        "solve_bdr_coordinate_descent: loss not declared convex in x (contract violation)");
  }
  if (!prob.loss.subgradient_x) {
    throw std::invalid_argument("solve_bdr_coordinate_descent: subgradient oracle required");
  }
  if (x0.size() != prob.decision_dim) {
    throw std::invalid_argument("solve_bdr_coordinate_descent: x0 has wrong dimension");
  }

  const Eigen::VectorXd box_lo = cfg.box_lower.size() == prob.decision_dim
                                     ? cfg.box_lower
                                     : Eigen::VectorXd::Constant(prob.decision_dim, -1e3);
  const Eigen::VectorXd box_hi = cfg.box_upper.size() == prob.decision_dim
                                     ? cfg.box_upper
                                     : Eigen::VectorXd::Constant(prob.decision_dim, 1e3);
  const auto project = [&](Eigen::VectorXd v) {
    return v.cwiseMax(box_lo).cwiseMin(box_hi);
  };

  const DiscreteDistribution empirical = empirical_from_samples(prob.samples);
  Eigen::VectorXd x = project(x0);
  Eigen::VectorXd best_x = x;
  double best_val = kInf;
  double prev_window_val = kInf;
  std::vector<double> window;
  long step_counter = 0;
  bool converged = false;
  int outer = 0;

  for (; outer < cfg.max_outer; ++outer) {
    // (a) inner worst case at fixed x; the transport-LP route supplies the
    // frozen distribution for the x-step (eq-16 style alternation).
    DiscreteDistribution frozen;
    if (prob.ball.radius == 0.0 || prob.beta == 0.0) {
      frozen = empirical;
    } else {
      if (prob.candidate_grid.empty()) {
        throw std::invalid_argument(
            "solve_bdr_coordinate_descent: candidate grid required for the inner solve");
      }
      frozen = worst_case_primal(prob.ball, bind_loss(prob, x), prob.candidate_grid)
                   .distribution;
    }

    // (b) projected subgradient descent on the frozen blend.
    for (int s = 0; s < cfg.x_steps_per_outer; ++s) {
      Eigen::VectorXd sub = Eigen::VectorXd::Zero(prob.decision_dim);
      if (prob.beta > 0.0) {
        for (Eigen::Index i = 0; i < frozen.size(); ++i) {
          sub += prob.beta * frozen.weights(i) *
                 prob.loss.subgradient_x(x, frozen.atoms[static_cast<std::size_t>(i)]);
        }
      }
      if (prob.beta < 1.0) {
        for (Eigen::Index i = 0; i < empirical.size(); ++i) {
          sub += (1.0 - prob.beta) * empirical.weights(i) *
                 prob.loss.subgradient_x(x, empirical.atoms[static_cast<std::size_t>(i)]);
        }
      }
      const double step = cfg.step_a / (static_cast<double>(step_counter++) + cfg.step_b);
      x = project(x - step * sub);
    }

    const BdrObjectiveValue cur = bdr_objective(prob, x, cfg);
    if (cur.value < best_val) {
      best_val = cur.value;
      best_x = x;
    }
    window.push_back(cur.value);
    if (window.size() >= 5) {
      const double lo = *std::min_element(window.end() - 5, window.end());
      const double hi = *std::max_element(window.end() - 5, window.end());
      if (std::abs(hi - lo) <= cfg.rel_tol * (1.0 + std::abs(lo)) &&
          std::abs(prev_window_val - lo) <= cfg.rel_tol * (1.0 + std::abs(lo))) {
        converged = true;
        ++outer;
        break;
      }
      prev_window_val = lo;
    }
  }

  // Report at the best iterate with a fresh inner solve.
  BdrSolution sol;
  sol.x_opt = best_x;
  double lambda0 = 0.0;
  const DiscreteDistribution emp = empirical_from_samples(prob.samples);
  sol.saa_part = expectation(emp, bind_loss(prob, best_x));
  sol.dro_part = worst_case_value(prob, best_x, cfg, &lambda0);
  sol.lambda0 = std::isfinite(lambda0) ? lambda0 : 0.0;
  sol.value = prob.beta * sol.dro_part + (1.0 - prob.beta) * sol.saa_part;
  sol.iterations = outer;
  sol.converged = converged;
  return sol;
}

}  // namespace bdr
