#include "bdr/wasserstein.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace bdr {

GroundMetric GroundMetric::euclidean() {
  return GroundMetric([](const SamplePoint& a, const SamplePoint& b) {
    return (a.coordinates - b.coordinates).norm();
  });
}

GroundMetric GroundMetric::inf_norm_label_flip(double kappa) {
  if (kappa < 0.0) throw std::invalid_argument("inf_norm_label_flip: kappa must be >= 0");
  return GroundMetric([kappa](const SamplePoint& a, const SamplePoint& b) {
    double d = (a.coordinates - b.coordinates).lpNorm<Eigen::Infinity>();
    if (a.label != b.label) d += kappa;
    return d;
  });
}

GroundMetric GroundMetric::custom(std::function<double(const SamplePoint&, const SamplePoint&)> fn) {
  return GroundMetric(std::move(fn));
}

void WassersteinBall::validate() const {
  center.validate();
  if (radius < 0.0) throw std::invalid_argument("WassersteinBall: radius must be >= 0");
  if (order < 1.0) throw std::invalid_argument("WassersteinBall: order must be >= 1");
}

void TransportPlan::validate(double tol) const {
  if (matrix.rows() != row_marginal.size() || matrix.cols() != col_marginal.size()) {
    throw std::invalid_argument("TransportPlan: marginal sizes do not match the matrix");
  }
  if ((matrix.array() < -tol).any()) {
    throw std::invalid_argument("TransportPlan: negative entry");
  }
  const Eigen::VectorXd rs = matrix.rowwise().sum();
  const Eigen::VectorXd cs = matrix.colwise().sum().transpose();
  if (((rs - row_marginal).cwiseAbs().array() > tol).any() ||
      ((cs - col_marginal).cwiseAbs().array() > tol).any()) {
    throw std::invalid_argument("TransportPlan: marginals violated beyond tolerance");
  }
}

namespace {

constexpr double kMaxCostEntries = 1e7;  // dense d^p matrix guardrail

Eigen::MatrixXd cost_matrix(const std::vector<SamplePoint>& rows,
                            const std::vector<SamplePoint>& cols, const GroundMetric& metric,
                            double p) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto m = static_cast<Eigen::Index>(cols.size());
  if (static_cast<double>(n) * static_cast<double>(m) > kMaxCostEntries) {
    throw std::invalid_argument("cost matrix would exceed the 1e7-entry guardrail (" +
                                std::to_string(n) + " x " + std::to_string(m) + ")");
  }
  Eigen::MatrixXd c(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      c(i, j) = std::pow(metric(rows[static_cast<std::size_t>(i)],
                                cols[static_cast<std::size_t>(j)]),
                         p);
    }
  }
  return c;
}

// Minimizes a convex function on [lo, hi] by golden-section search.
std::pair<double, double> golden_min(const std::function<double(double)>& f, double lo,
                                     double hi, double xtol) {
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double x1 = b - invphi * (b - a);
  double x2 = a + invphi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > xtol) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - invphi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + invphi * (b - a);
      f2 = f(x2);
    }
  }
  const double x = 0.5 * (a + b);
  return {x, f(x)};
}

}  // namespace

std::pair<double, TransportPlan> wasserstein_distance(const DiscreteDistribution& a,
                                                      const DiscreteDistribution& b, double p,
                                                      const GroundMetric& metric) {
  a.validate();
  b.validate();
  if (p < 1.0) throw std::invalid_argument("wasserstein_distance: order p must be >= 1");
  if (a.dimension() != b.dimension()) {
    throw std::invalid_argument("wasserstein_distance: distributions on different spaces");
  }
  const Eigen::Index n = a.size(), m = b.size();
  const Eigen::MatrixXd c = cost_matrix(a.atoms, b.atoms, metric, p);

  LinearProgram lp = LinearProgram::with_sizes(n * m, n + m);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      lp.objective(i * m + j) = c(i, j);
      lp.constraints(i, i * m + j) = 1.0;
      lp.constraints(n + j, i * m + j) = 1.0;
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    lp.relations[static_cast<std::size_t>(i)] = Relation::Equal;
    lp.rhs(i) = a.weights(i);
  }
  for (Eigen::Index j = 0; j < m; ++j) {
    lp.relations[static_cast<std::size_t>(n + j)] = Relation::Equal;
    lp.rhs(n + j) = b.weights(j);
  }
  const LpSolution sol = solve_lp(lp);
  if (sol.status != LpStatus::Optimal) {
    throw LpError("wasserstein_distance: transport LP not optimal (internal error)");
  }
  TransportPlan plan;
  plan.matrix = Eigen::MatrixXd(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      plan.matrix(i, j) = std::max(0.0, sol.primal(i * m + j));
    }
  }
  plan.row_marginal = a.weights;
  plan.col_marginal = b.weights;
  const double val = std::max(0.0, sol.value);
  return {std::pow(val, 1.0 / p), std::move(plan)};
}

WorstCaseResult worst_case_primal(const WassersteinBall& ball, const LossFn& h,
                                  const std::vector<SamplePoint>& candidate_atoms) {
  ball.validate();
  if (candidate_atoms.empty()) {
    throw std::invalid_argument("worst_case_primal: empty candidate set");
  }
  const Eigen::Index n = ball.center.size();
  const auto g = static_cast<Eigen::Index>(candidate_atoms.size());
  Eigen::VectorXd hv(g);
  for (Eigen::Index j = 0; j < g; ++j) {
    hv(j) = h(candidate_atoms[static_cast<std::size_t>(j)]);
    if (!std::isfinite(hv(j))) {
      throw std::domain_error("worst_case_primal: non-finite loss at candidate " +
                              std::to_string(j));
    }
  }
  const Eigen::MatrixXd c = cost_matrix(ball.center.atoms, candidate_atoms, ball.metric,
                                        ball.order);
  const double budget = std::pow(ball.radius, ball.order);

  // Rows 0..n-1: row sums equal the center weights; row n: transport budget.
  LinearProgram lp = LinearProgram::with_sizes(n * g, n + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < g; ++j) {
      lp.objective(i * g + j) = -hv(j);
      lp.constraints(i, i * g + j) = 1.0;
      lp.constraints(n, i * g + j) = c(i, j);
    }
    lp.relations[static_cast<std::size_t>(i)] = Relation::Equal;
    lp.rhs(i) = ball.center.weights(i);
  }
  lp.relations[static_cast<std::size_t>(n)] = Relation::LessEqual;
  lp.rhs(n) = budget;

  const LpSolution sol = solve_lp(lp);
  if (sol.status == LpStatus::Infeasible) {
    throw LpError("worst_case_primal: no transport within budget reaches the candidate set");
  }
  if (sol.status != LpStatus::Optimal) {
    throw LpError("worst_case_primal: transport LP not optimal (internal error)");
  }

  WorstCaseResult out;
  out.value = -sol.value;
  out.dual_lambda0 = std::max(0.0, -sol.dual(n));
  out.plan.matrix = Eigen::MatrixXd(n, g);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < g; ++j) {
      out.plan.matrix(i, j) = std::max(0.0, sol.primal(i * g + j));
    }
  }
  out.plan.row_marginal = ball.center.weights;
  out.plan.col_marginal = out.plan.matrix.colwise().sum().transpose();

  const Eigen::VectorXd col = out.plan.col_marginal;
  for (Eigen::Index j = 0; j < g; ++j) {
    if (col(j) > 1e-15) {
      out.distribution.atoms.push_back(candidate_atoms[static_cast<std::size_t>(j)]);
    }
  }
  out.distribution.weights.resize(static_cast<Eigen::Index>(out.distribution.atoms.size()));
  for (Eigen::Index j = 0, k = 0; j < g; ++j) {
    if (col(j) > 1e-15) out.distribution.weights(k++) = col(j);
  }

  // Theorem-6 split bookkeeping: the (single) center row shipping to two
  // candidate columns, when present.
  const double split_tol = 1e-9;
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index first = -1, count = 0;
    for (Eigen::Index j = 0; j < g; ++j) {
      if (out.plan.matrix(i, j) > split_tol) {
        if (count == 0) first = j;
        ++count;
      }
    }
    if (count >= 2) {
      out.split_atom_index = i;
      out.split_fraction = out.plan.matrix(i, first) / ball.center.weights(i);
      break;
    }
  }
  return out;
}

std::pair<double, double> worst_case_dual(const WassersteinBall& ball, const LossFn& h,
                                          const InnerMaxFn& inner_max, double lambda_max,
                                          double lambda_min) {
  ball.validate();
  const Eigen::Index n = ball.center.size();
  if (ball.radius == 0.0) {
    return {expectation(ball.center, h), kInf};
  }
  const double eps_p = std::pow(ball.radius, ball.order);
  auto dual_obj = [&](double lambda0) {
    double v = eps_p * lambda0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double inner = inner_max(lambda0, ball.center.atoms[static_cast<std::size_t>(i)]);
      if (!std::isfinite(inner)) {
        throw std::domain_error(
            "worst_case_dual: inner maximization unbounded -- growth-rate condition violated");
      }
      v += ball.center.weights(i) * inner;
    }
    return v;
  };

  double hi = lambda_max > lambda_min ? lambda_max : lambda_min + 1.0;
  for (int rounds = 0; rounds < 64; ++rounds) {
    auto [argmin, value] = golden_min(dual_obj, lambda_min, hi, 1e-10 * (1.0 + hi));
    if (argmin < lambda_min + 0.99 * (hi - lambda_min) || lambda_max > lambda_min) {
      return {value, argmin};
    }
    hi = lambda_min + 4.0 * (hi - lambda_min);
    if (hi > 1e12) break;
  }
  throw std::domain_error(
      "worst_case_dual: objective decreases without bound -- growth-rate condition violated");
}

std::pair<double, double> worst_case_dual_on_grid(const WassersteinBall& ball, const LossFn& h,
                                                  const std::vector<SamplePoint>& grid) {
  ball.validate();
  if (grid.empty()) throw std::invalid_argument("worst_case_dual_on_grid: empty grid");
  const Eigen::Index n = ball.center.size();
  const auto g = static_cast<Eigen::Index>(grid.size());
  Eigen::VectorXd hv(g);
  for (Eigen::Index j = 0; j < g; ++j) hv(j) = h(grid[static_cast<std::size_t>(j)]);
  const Eigen::MatrixXd c = cost_matrix(ball.center.atoms, grid, ball.metric, ball.order);

  // Bracket from the observed growth rate: lambda* <= max gain/distance ratio.
  double growth = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double hi = h(ball.center.atoms[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < g; ++j) {
      if (c(i, j) > 1e-14) growth = std::max(growth, (hv(j) - hi) / c(i, j));
    }
  }
  const double lambda_max = 2.0 * growth + 1.0;

  std::vector<Eigen::Index> atom_row(ball.center.atoms.size());
  for (std::size_t i = 0; i < atom_row.size(); ++i) atom_row[i] = static_cast<Eigen::Index>(i);
  Eigen::Index next_row = 0;
  auto inner = [&](double lambda0, const SamplePoint& atom) {
    // rows are visited in order by the dual objective loop
    Eigen::Index i = next_row;
    if (i >= n || !ball.center.atoms[static_cast<std::size_t>(i)].same_atom(atom)) {
      i = 0;
      while (i < n && !ball.center.atoms[static_cast<std::size_t>(i)].same_atom(atom)) ++i;
      if (i == n) throw std::logic_error("worst_case_dual_on_grid: unknown center atom");
    }
    next_row = (i + 1) % n;
    return (hv.array() - lambda0 * c.row(i).transpose().array()).maxCoeff();
  };
  return worst_case_dual(ball, h, inner, lambda_max);
}

std::pair<double, std::vector<SamplePoint>> worst_case_equal_weight(
    const WassersteinBall& ball, const LossFn& h, const std::vector<SamplePoint>& grid) {
  ball.validate();
  const Eigen::Index n = ball.center.size();
  const double uniform = 1.0 / static_cast<double>(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(ball.center.weights(i) - uniform) > 1e-12) {
      throw std::invalid_argument("worst_case_equal_weight: center weights must be uniform 1/n");
    }
  }
  if (grid.empty()) throw std::invalid_argument("worst_case_equal_weight: empty grid");
  const auto g = static_cast<Eigen::Index>(grid.size());
  Eigen::VectorXd hv(g);
  for (Eigen::Index j = 0; j < g; ++j) hv(j) = h(grid[static_cast<std::size_t>(j)]);
  const Eigen::MatrixXd c = cost_matrix(ball.center.atoms, grid, ball.metric, ball.order);

  // (1/n) sum_i h(xi'_i) s.t. (1/n) sum_i d^p(xi_i, xi'_i) <= eps^p, with the
  // relocation choice relaxed to a row-stochastic transport plan.
  LinearProgram lp = LinearProgram::with_sizes(n * g, n + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < g; ++j) {
      lp.objective(i * g + j) = -uniform * hv(j);
      lp.constraints(i, i * g + j) = 1.0;
      lp.constraints(n, i * g + j) = uniform * c(i, j);
    }
    lp.relations[static_cast<std::size_t>(i)] = Relation::Equal;
    lp.rhs(i) = 1.0;
  }
  lp.relations[static_cast<std::size_t>(n)] = Relation::LessEqual;
  lp.rhs(n) = std::pow(ball.radius, ball.order);

  const LpSolution sol = solve_lp(lp);
  if (sol.status == LpStatus::Infeasible) {
    throw LpError("worst_case_equal_weight: no relocation within budget reaches the grid");
  }
  if (sol.status != LpStatus::Optimal) {
    throw LpError("worst_case_equal_weight: LP not optimal (internal error)");
  }
  std::vector<SamplePoint> relocations;
  relocations.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index best = 0;
    double best_share = -1.0;
    for (Eigen::Index j = 0; j < g; ++j) {
      const double share = sol.primal(i * g + j);
      if (share > best_share) {
        best_share = share;
        best = j;
      }
    }
    relocations.push_back(grid[static_cast<std::size_t>(best)]);
  }
  return {-sol.value, std::move(relocations)};
}

bool verify_support_structure(const WorstCaseResult& result,
                              const DiscreteDistribution& center, double tol) {
  const Eigen::Index n = center.size();
  const auto& plan = result.plan.matrix;
  if (plan.rows() != n) return false;

  Eigen::Index support = 0;
  for (Eigen::Index j = 0; j < plan.cols(); ++j) {
    if (plan.col(j).sum() > tol) ++support;
  }
  if (support > n + 1) return false;

  Eigen::Index split_rows = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index nz = 0;
    double shipped = 0.0;
    for (Eigen::Index j = 0; j < plan.cols(); ++j) {
      if (plan(i, j) > tol) {
        ++nz;
        shipped += plan(i, j);
      }
    }
    if (nz == 0 && center.weights(i) > tol) return false;
    if (nz > 2) return false;
    if (nz == 2) ++split_rows;
    if (std::abs(shipped - center.weights(i)) > tol * 10.0 + 1e-12) return false;
  }
  return split_rows <= 1;
}

std::optional<double> growth_rate_check(
    const LossFn& h, const GroundMetric& metric, double p,
    const std::vector<std::pair<SamplePoint, SamplePoint>>& probes) {
  std::optional<double> best;
  for (const auto& [xi, xi0] : probes) {
    const double d = metric(xi, xi0);
    if (d <= 0.0) continue;
    const double ratio = (h(xi) - h(xi0)) / std::pow(d, p);
    if (!best || ratio > *best) best = ratio;
  }
  return best;
}

}  // namespace bdr
