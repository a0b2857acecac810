#pragma once

#include <Eigen/Dense>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace bdr {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Relation { LessEqual, Equal, GreaterEqual };
enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when the pivot count exceeds the configured maximum.
struct IterationLimitError : LpError {
  using LpError::LpError;
};

// Dense linear program:  minimize objective . z  subject to
//   constraints.row(i) . z  (relations[i])  rhs(i)      for every row i,
//   lower(j) <= z(j) <= upper(j)                        for every variable j.
// Bounds may be +-infinity; +inf upper bounds are sentinels, never big-M.
struct LinearProgram {
  Eigen::VectorXd objective;
  Eigen::MatrixXd constraints;
  std::vector<Relation> relations;
  Eigen::VectorXd rhs;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  Eigen::Index num_vars() const { return objective.size(); }
  Eigen::Index num_rows() const { return rhs.size(); }

  // Default bounds z >= 0.
  static LinearProgram with_sizes(Eigen::Index vars, Eigen::Index rows);

  // Throws std::invalid_argument on dimension mismatches or lower > upper.
  void validate() const;
};

struct SimplexOptions {
  double feas_tol = 1e-9;
  // 0 means 50 * (rows + vars).
  long max_iterations = 0;
  // Warm start: one entry per row, holding the basic column for that row
  // (column j < num_vars is structural, j = num_vars + i is row i's slack).
  // Taken from a previous LpSolution::basis.  Ignored when empty or when the
  // implied basic point is infeasible.
  std::vector<int> initial_basis;
};

struct LpSolution {
  LpStatus status = LpStatus::Optimal;
  double value = 0.0;
  Eigen::VectorXd primal;
  // One multiplier per constraint row, y(i) = d value / d rhs(i).  With this
  // convention y <= 0 on binding LessEqual rows and y >= 0 on GreaterEqual
  // rows of a minimization.  For Infeasible problems this holds the phase-1
  // multipliers (a Farkas-type certificate).
  Eigen::VectorXd dual;
  // Unbounded: an improving ray in the structural variables.
  Eigen::VectorXd ray;
  long iterations = 0;
  // Final basis, reusable as SimplexOptions::initial_basis.
  std::vector<int> basis;
};

// Two-phase revised simplex, deterministic pivoting (largest reduced cost,
// exact ties to the lowest index; Bland's rule after a degenerate streak).
LpSolution solve_lp(const LinearProgram& lp, double tol);
LpSolution solve_lp(const LinearProgram& lp, const SimplexOptions& opts = {});

// True iff every row relation and every bound holds within tol at z.
bool check_feasible(const LinearProgram& lp, const Eigen::VectorXd& z, double tol);

// |c.primal - (rhs.dual + sum_j d_j z_j)| where d = c - A^T y are the bound
// multipliers; zero at an exact optimum.
double duality_gap(const LinearProgram& lp, const LpSolution& sol);

// Largest violation of dual feasibility / complementary slackness of
// (sol.primal, sol.dual): sign conditions on row multipliers per relation and
// on reduced costs per active bound.
double dual_feasibility_violation(const LinearProgram& lp, const LpSolution& sol);

namespace detail {
class SimplexCore;
}

// Retains the factorized basis between solves so that a family of programs
// differing only in the objective vector can be re-solved in a handful of
// pivots (the previous optimal basis stays primal feasible).
class SimplexSolver {
 public:
  explicit SimplexSolver(LinearProgram lp);
  ~SimplexSolver();
  SimplexSolver(SimplexSolver&&) noexcept;
  SimplexSolver& operator=(SimplexSolver&&) noexcept;

  LpSolution solve(const SimplexOptions& opts = {});
  // Replaces the objective and re-solves from the current basis.
  LpSolution resolve_with_objective(const Eigen::VectorXd& objective,
                                    const SimplexOptions& opts = {});

  const LinearProgram& program() const { return lp_; }

 private:
  LinearProgram lp_;
  std::unique_ptr<detail::SimplexCore> core_;
};

}  // namespace bdr
