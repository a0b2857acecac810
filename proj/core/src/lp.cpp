#include "bdr/lp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

namespace bdr {

LinearProgram LinearProgram::with_sizes(Eigen::Index vars, Eigen::Index rows) {
  LinearProgram lp;
  lp.objective = Eigen::VectorXd::Zero(vars);
  lp.constraints = Eigen::MatrixXd::Zero(rows, vars);
  lp.relations.assign(static_cast<std::size_t>(rows), Relation::LessEqual);
  lp.rhs = Eigen::VectorXd::Zero(rows);
  lp.lower = Eigen::VectorXd::Zero(vars);
  lp.upper = Eigen::VectorXd::Constant(vars, kInf);
  return lp;
}

void LinearProgram::validate() const {
  const Eigen::Index n = num_vars();
  const Eigen::Index m = num_rows();
  if (constraints.cols() != n) {
    throw std::invalid_argument("LinearProgram: constraint matrix has " +
                                std::to_string(constraints.cols()) +
                                " columns, objective has " + std::to_string(n));
  }
  if (constraints.rows() != m || static_cast<Eigen::Index>(relations.size()) != m) {
    throw std::invalid_argument("LinearProgram: row count mismatch between A, rhs, relations");
  }
  if (lower.size() != n || upper.size() != n) {
    throw std::invalid_argument("LinearProgram: bound vectors must match variable count");
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    if (std::isnan(lower(j)) || std::isnan(upper(j)) || lower(j) > upper(j)) {
      throw std::invalid_argument("LinearProgram: invalid bounds on variable " + std::to_string(j));
    }
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    if (!std::isfinite(rhs(i))) {
      throw std::invalid_argument("LinearProgram: rhs must be finite (row " + std::to_string(i) + ")");
    }
  }
}

bool check_feasible(const LinearProgram& lp, const Eigen::VectorXd& z, double tol) {
  lp.validate();
  if (z.size() != lp.num_vars()) {
    throw std::invalid_argument("check_feasible: point has " + std::to_string(z.size()) +
                                " entries, LP has " + std::to_string(lp.num_vars()) +
                                " variables");
  }
  for (Eigen::Index j = 0; j < lp.num_vars(); ++j) {
    if (z(j) < lp.lower(j) - tol || z(j) > lp.upper(j) + tol) return false;
  }
  const Eigen::VectorXd row_vals = lp.constraints * z;
  for (Eigen::Index i = 0; i < lp.num_rows(); ++i) {
    const double v = row_vals(i);
    switch (lp.relations[static_cast<std::size_t>(i)]) {
      case Relation::LessEqual:
        if (v > lp.rhs(i) + tol) return false;
        break;
      case Relation::GreaterEqual:
        if (v < lp.rhs(i) - tol) return false;
        break;
      case Relation::Equal:
        if (std::abs(v - lp.rhs(i)) > tol) return false;
        break;
    }
  }
  return true;
}

double duality_gap(const LinearProgram& lp, const LpSolution& sol) {
  const Eigen::VectorXd d = lp.objective - lp.constraints.transpose() * sol.dual;
  const double dual_obj = lp.rhs.dot(sol.dual) + d.dot(sol.primal);
  return std::abs(lp.objective.dot(sol.primal) - dual_obj);
}

double dual_feasibility_violation(const LinearProgram& lp, const LpSolution& sol) {
  const double tol_at = 1e-7;  // classifies which bound a primal value sits on
  double worst = 0.0;
  for (Eigen::Index i = 0; i < lp.num_rows(); ++i) {
    const double y = sol.dual(i);
    switch (lp.relations[static_cast<std::size_t>(i)]) {
      case Relation::LessEqual:
        worst = std::max(worst, y);  // must be <= 0
        break;
      case Relation::GreaterEqual:
        worst = std::max(worst, -y);  // must be >= 0
        break;
      case Relation::Equal:
        break;
    }
  }
  const Eigen::VectorXd d = lp.objective - lp.constraints.transpose() * sol.dual;
  for (Eigen::Index j = 0; j < lp.num_vars(); ++j) {
    const bool at_lower = std::isfinite(lp.lower(j)) && sol.primal(j) <= lp.lower(j) + tol_at;
    const bool at_upper = std::isfinite(lp.upper(j)) && sol.primal(j) >= lp.upper(j) - tol_at;
    if (at_lower && at_upper) continue;  // fixed variable, any sign
    if (at_lower) {
      worst = std::max(worst, -d(j));  // reduced cost must be >= 0
    } else if (at_upper) {
      worst = std::max(worst, d(j));  // must be <= 0
    } else {
      worst = std::max(worst, std::abs(d(j)));  // interior: must vanish
    }
  }
  return worst;
}

namespace detail {

namespace {
enum VarStatus : signed char { kBasic = 0, kAtLower = 1, kAtUpper = 2, kFreeNonbasic = 3 };
}  // namespace

// Bounded-variable two-phase revised simplex over an explicit dense basis
// inverse.  Columns 0..n-1 are structural, n..n+m-1 row slacks, and any
// phase-1 artificials follow.  The constraint system is [A I | R] x = b.
class SimplexCore {
 public:
  SimplexCore(const LinearProgram& lp) { build(lp); }

  LpSolution solve(const SimplexOptions& opts) {
    feas_tol_ = opts.feas_tol;
    max_iter_ = opts.max_iterations > 0
                    ? opts.max_iterations
                    : 50 * static_cast<long>(m_ + n_);
    iterations_ = 0;

    bool warm = false;
    if (static_cast<int>(opts.initial_basis.size()) == m_) {
      warm = adopt_basis(opts.initial_basis);
    } else if (have_state_) {
      warm = reuse_state();
    }
    if (!warm) cold_start();

    for (int attempt = 0;; ++attempt) {
      try {
        return run_phases();
      } catch (const SingularBasisError&) {
        // a degenerate pivot chain corrupted the basis: restart cold
        if (attempt >= 1) throw LpError("simplex: repeated singular basis");
        cold_start();
      }
    }
  }

  void set_objective(const Eigen::VectorXd& c) {
    for (int j = 0; j < n_; ++j) cost_full_[j] = c(j);
  }

 private:
  enum class RunOutcome { kOptimal, kUnbounded, kIterLimit };
  struct SingularBasisError {};

  LpSolution run_phases() {
    if (needs_phase1_) {
      set_phase1_costs();
      refresh_duals();
      bland_ = false;
      degenerate_streak_ = 0;
      const RunOutcome out = run();
      if (out == RunOutcome::kIterLimit) throw_iteration_limit();
      if (phase_objective() > infeasibility_tol()) return extract_infeasible();
      expel_artificials();
    }
    set_phase2_costs();
    refresh_duals();
    bland_ = false;
    degenerate_streak_ = 0;
    const RunOutcome out = run();
    if (out == RunOutcome::kIterLimit) throw_iteration_limit();
    if (out == RunOutcome::kUnbounded) return extract_unbounded();
    return extract_optimal();
  }

  // ---- problem data in computational form ----
  int m_ = 0;  // rows
  int n_ = 0;  // structural variables
  int ncols_ = 0;  // structural + slack + artificial
  std::vector<int> col_ptr_, row_idx_;
  std::vector<double> val_;  // CSC of structural + slack columns
  std::vector<int> artif_row_;
  std::vector<double> artif_sign_;
  std::vector<double> lo_, up_;
  Eigen::VectorXd b_;
  std::vector<double> cost_full_;  // phase-2 costs (structural c, 0 elsewhere)

  // ---- simplex state ----
  std::vector<int> basis_;             // basic column per row position
  std::vector<signed char> vstat_;     // per column
  std::vector<double> xval_;           // resting value of nonbasic columns
  Eigen::MatrixXd binv_;
  Eigen::VectorXd xb_;
  Eigen::VectorXd beff_;               // b minus nonbasic contributions
  std::vector<double> cost_;           // active phase costs
  Eigen::VectorXd d_;                  // reduced costs (all columns)
  Eigen::VectorXd devex_;              // Devex reference weights
  Eigen::VectorXd alpha_;              // pivot-row products, reused per pivot
  bool needs_phase1_ = false;
  bool have_state_ = false;
  bool trace_ = false;
  double feas_tol_ = 1e-9;
  long max_iter_ = 0;
  long iterations_ = 0;
  long degenerate_streak_ = 0;
  bool bland_ = false;

  static constexpr double kPivotEps = 1e-11;
  static constexpr double kStrongPivot = 1e-7;
  static constexpr long kBlandAfter = 1000;
  static constexpr long kCheckInterval = 100;

  void build(const LinearProgram& lp) {
    lp.validate();
    trace_ = std::getenv("BDR_LP_TRACE") != nullptr;
    m_ = static_cast<int>(lp.num_rows());
    n_ = static_cast<int>(lp.num_vars());
    ncols_ = n_ + m_;
    b_ = lp.rhs;

    col_ptr_.assign(static_cast<std::size_t>(ncols_) + 1, 0);
    std::size_t nnz = 0;
    for (int j = 0; j < n_; ++j) {
      for (int i = 0; i < m_; ++i) {
        if (lp.constraints(i, j) != 0.0) ++nnz;
      }
    }
    row_idx_.reserve(nnz + static_cast<std::size_t>(m_));
    val_.reserve(nnz + static_cast<std::size_t>(m_));
    for (int j = 0; j < n_; ++j) {
      col_ptr_[static_cast<std::size_t>(j)] = static_cast<int>(row_idx_.size());
      for (int i = 0; i < m_; ++i) {
        const double a = lp.constraints(i, j);
        if (a != 0.0) {
          row_idx_.push_back(i);
          val_.push_back(a);
        }
      }
    }
    for (int i = 0; i < m_; ++i) {  // slack columns
      col_ptr_[static_cast<std::size_t>(n_ + i)] = static_cast<int>(row_idx_.size());
      row_idx_.push_back(i);
      val_.push_back(1.0);
    }
    col_ptr_[static_cast<std::size_t>(ncols_)] = static_cast<int>(row_idx_.size());

    lo_.resize(static_cast<std::size_t>(ncols_));
    up_.resize(static_cast<std::size_t>(ncols_));
    for (int j = 0; j < n_; ++j) {
      lo_[static_cast<std::size_t>(j)] = lp.lower(j);
      up_[static_cast<std::size_t>(j)] = lp.upper(j);
    }
    for (int i = 0; i < m_; ++i) {
      switch (lp.relations[static_cast<std::size_t>(i)]) {
        case Relation::LessEqual:
          lo_[static_cast<std::size_t>(n_ + i)] = 0.0;
          up_[static_cast<std::size_t>(n_ + i)] = kInf;
          break;
        case Relation::Equal:
          lo_[static_cast<std::size_t>(n_ + i)] = 0.0;
          up_[static_cast<std::size_t>(n_ + i)] = 0.0;
          break;
        case Relation::GreaterEqual:
          lo_[static_cast<std::size_t>(n_ + i)] = -kInf;
          up_[static_cast<std::size_t>(n_ + i)] = 0.0;
          break;
      }
    }
    cost_full_.assign(static_cast<std::size_t>(ncols_), 0.0);
    for (int j = 0; j < n_; ++j) cost_full_[static_cast<std::size_t>(j)] = lp.objective(j);
  }

  int total_cols() const { return ncols_ + static_cast<int>(artif_row_.size()); }

  bool is_artificial(int j) const { return j >= ncols_; }

  double col_lo(int j) const { return is_artificial(j) ? alo_[static_cast<std::size_t>(j - ncols_)] : lo_[static_cast<std::size_t>(j)]; }
  double col_up(int j) const { return is_artificial(j) ? aup_[static_cast<std::size_t>(j - ncols_)] : up_[static_cast<std::size_t>(j)]; }
  void set_col_bounds(int j, double lo, double up) {
    if (is_artificial(j)) {
      alo_[static_cast<std::size_t>(j - ncols_)] = lo;
      aup_[static_cast<std::size_t>(j - ncols_)] = up;
    } else {
      lo_[static_cast<std::size_t>(j)] = lo;
      up_[static_cast<std::size_t>(j)] = up;
    }
  }
  std::vector<double> alo_, aup_;

  // w = binv * column j
  void ftran(int j, Eigen::VectorXd& w) const {
    if (is_artificial(j)) {
      const int r = artif_row_[static_cast<std::size_t>(j - ncols_)];
      w = artif_sign_[static_cast<std::size_t>(j - ncols_)] * binv_.col(r);
      return;
    }
    w.setZero();
    for (int k = col_ptr_[static_cast<std::size_t>(j)]; k < col_ptr_[static_cast<std::size_t>(j) + 1]; ++k) {
      w.noalias() += val_[static_cast<std::size_t>(k)] * binv_.col(row_idx_[static_cast<std::size_t>(k)]);
    }
  }

  double col_dot(int j, const Eigen::VectorXd& rho) const {
    if (is_artificial(j)) {
      return artif_sign_[static_cast<std::size_t>(j - ncols_)] *
             rho(artif_row_[static_cast<std::size_t>(j - ncols_)]);
    }
    double s = 0.0;
    for (int k = col_ptr_[static_cast<std::size_t>(j)]; k < col_ptr_[static_cast<std::size_t>(j) + 1]; ++k) {
      s += val_[static_cast<std::size_t>(k)] * rho(row_idx_[static_cast<std::size_t>(k)]);
    }
    return s;
  }

  double resting_value(int j) const {
    switch (vstat_[static_cast<std::size_t>(j)]) {
      case kAtLower: return col_lo(j);
      case kAtUpper: return col_up(j);
      default: return 0.0;
    }
  }

  void cold_start() {
    artif_row_.clear();
    artif_sign_.clear();
    alo_.clear();
    aup_.clear();
    vstat_.assign(static_cast<std::size_t>(ncols_), kAtLower);
    xval_.assign(static_cast<std::size_t>(ncols_), 0.0);
    for (int j = 0; j < ncols_; ++j) {
      const double lo = col_lo(j), up = col_up(j);
      if (std::isfinite(lo)) {
        vstat_[static_cast<std::size_t>(j)] = kAtLower;
        xval_[static_cast<std::size_t>(j)] = lo;
      } else if (std::isfinite(up)) {
        vstat_[static_cast<std::size_t>(j)] = kAtUpper;
        xval_[static_cast<std::size_t>(j)] = up;
      } else {
        vstat_[static_cast<std::size_t>(j)] = kFreeNonbasic;
        xval_[static_cast<std::size_t>(j)] = 0.0;
      }
    }

    // Residual with every structural column at its resting value and all
    // slacks at zero; rows whose slack range cannot absorb it get artificials.
    Eigen::VectorXd resid = b_;
    for (int j = 0; j < n_; ++j) {
      const double x = xval_[static_cast<std::size_t>(j)];
      if (x != 0.0) {
        for (int k = col_ptr_[static_cast<std::size_t>(j)]; k < col_ptr_[static_cast<std::size_t>(j) + 1]; ++k) {
          resid(row_idx_[static_cast<std::size_t>(k)]) -= x * val_[static_cast<std::size_t>(k)];
        }
      }
    }

    basis_.assign(static_cast<std::size_t>(m_), -1);
    needs_phase1_ = false;
    std::vector<double> binv_diag(static_cast<std::size_t>(m_), 1.0);
    for (int i = 0; i < m_; ++i) {
      const int sj = n_ + i;
      const double v = resid(i);
      if (v >= col_lo(sj) - feas_tol_ && v <= col_up(sj) + feas_tol_) {
        basis_[static_cast<std::size_t>(i)] = sj;
        vstat_[static_cast<std::size_t>(sj)] = kBasic;
      } else {
        // slack rests at zero; artificial absorbs the residual
        const double sign = v >= 0.0 ? 1.0 : -1.0;
        const int aj = ncols_ + static_cast<int>(artif_row_.size());
        artif_row_.push_back(i);
        artif_sign_.push_back(sign);
        alo_.push_back(0.0);
        aup_.push_back(kInf);
        basis_[static_cast<std::size_t>(i)] = aj;
        vstat_.push_back(kBasic);
        xval_.push_back(0.0);
        binv_diag[static_cast<std::size_t>(i)] = sign;  // B = diag(signs)
        needs_phase1_ = true;
      }
    }
    binv_ = Eigen::MatrixXd::Zero(m_, m_);
    for (int i = 0; i < m_; ++i) binv_(i, i) = binv_diag[static_cast<std::size_t>(i)];
    recompute_beff();
    xb_ = binv_ * beff_;
    have_state_ = true;
  }

  // Warm start from an explicit basis; returns false when unusable.
  bool adopt_basis(const std::vector<int>& basis) {
    for (int j : basis) {
      if (j < 0 || j >= ncols_) return false;
    }
    artif_row_.clear();
    artif_sign_.clear();
    alo_.clear();
    aup_.clear();
    basis_ = basis;
    vstat_.assign(static_cast<std::size_t>(ncols_), kAtLower);
    xval_.assign(static_cast<std::size_t>(ncols_), 0.0);
    for (int j = 0; j < ncols_; ++j) {
      const double lo = col_lo(j), up = col_up(j);
      if (std::isfinite(lo)) {
        vstat_[static_cast<std::size_t>(j)] = kAtLower;
        xval_[static_cast<std::size_t>(j)] = lo;
      } else if (std::isfinite(up)) {
        vstat_[static_cast<std::size_t>(j)] = kAtUpper;
        xval_[static_cast<std::size_t>(j)] = up;
      } else {
        vstat_[static_cast<std::size_t>(j)] = kFreeNonbasic;
      }
    }
    for (int j : basis_) vstat_[static_cast<std::size_t>(j)] = kBasic;
    if (!factorize()) return false;
    recompute_beff();
    xb_ = binv_ * beff_;
    for (int i = 0; i < m_; ++i) {
      const int j = basis_[static_cast<std::size_t>(i)];
      if (xb_(i) < col_lo(j) - 1e-7 || xb_(i) > col_up(j) + 1e-7) return false;
    }
    needs_phase1_ = false;
    have_state_ = true;
    return true;
  }

  // Reuse the state left by a previous solve (objective re-solves).  The
  // basis inverse is still current, so no refactorization is needed.
  bool reuse_state() {
    for (int j : basis_) {
      if (is_artificial(j)) return false;
    }
    for (int i = 0; i < m_; ++i) {
      const int j = basis_[static_cast<std::size_t>(i)];
      if (xb_(i) < col_lo(j) - 1e-7 || xb_(i) > col_up(j) + 1e-7) return false;
    }
    needs_phase1_ = false;
    return true;
  }

  void recompute_beff() {
    beff_ = b_;
    for (int j = 0; j < total_cols(); ++j) {
      if (vstat_[static_cast<std::size_t>(j)] == kBasic) continue;
      const double x = resting_value(j);
      xval_[static_cast<std::size_t>(j)] = x;
      if (x == 0.0) continue;
      if (is_artificial(j)) {
        beff_(artif_row_[static_cast<std::size_t>(j - ncols_)]) -=
            x * artif_sign_[static_cast<std::size_t>(j - ncols_)];
      } else {
        for (int k = col_ptr_[static_cast<std::size_t>(j)]; k < col_ptr_[static_cast<std::size_t>(j) + 1]; ++k) {
          beff_(row_idx_[static_cast<std::size_t>(k)]) -= x * val_[static_cast<std::size_t>(k)];
        }
      }
    }
  }

  // Rebuilds binv_ from basis_: permuted-triangular fast path, dense LU fallback.
  bool factorize() {
    binv_.setZero(m_, m_);
    if (triangular_inverse()) return true;
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(m_, m_);
    for (int i = 0; i < m_; ++i) {
      const int j = basis_[static_cast<std::size_t>(i)];
      if (is_artificial(j)) {
        B(artif_row_[static_cast<std::size_t>(j - ncols_)], i) =
            artif_sign_[static_cast<std::size_t>(j - ncols_)];
      } else {
        for (int k = col_ptr_[static_cast<std::size_t>(j)]; k < col_ptr_[static_cast<std::size_t>(j) + 1]; ++k) {
          B(row_idx_[static_cast<std::size_t>(k)], i) = val_[static_cast<std::size_t>(k)];
        }
      }
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
    const Eigen::MatrixXd& u = lu.matrixLU();
    double mind = kInf;
    for (int i = 0; i < m_; ++i) mind = std::min(mind, std::abs(u(i, i)));
    if (trace_) std::fprintf(stderr, "lp: dense refactor at iter=%ld min|diag|=%.3e\n", iterations_, mind);
    if (mind < 1e-12) return false;  // singular basis
    binv_ = lu.inverse();
    return true;
  }

  // If the basis is a permuted triangular matrix (true for slack bases and the
  // structured crash bases used by callers), invert it column by column in
  // O(m * nnz) without a dense LU.
  bool triangular_inverse() {
    const int m = m_;
    std::vector<std::vector<std::pair<int, double>>> bcols(static_cast<std::size_t>(m));
    std::vector<int> row_count(static_cast<std::size_t>(m), 0);
    std::vector<std::vector<int>> row_cols(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
      const int j = basis_[static_cast<std::size_t>(i)];
      if (is_artificial(j)) {
        const int r = artif_row_[static_cast<std::size_t>(j - ncols_)];
        bcols[static_cast<std::size_t>(i)].push_back({r, artif_sign_[static_cast<std::size_t>(j - ncols_)]});
      } else {
        for (int k = col_ptr_[static_cast<std::size_t>(j)]; k < col_ptr_[static_cast<std::size_t>(j) + 1]; ++k) {
          bcols[static_cast<std::size_t>(i)].push_back(
              {row_idx_[static_cast<std::size_t>(k)], val_[static_cast<std::size_t>(k)]});
        }
      }
      for (const auto& [r, v] : bcols[static_cast<std::size_t>(i)]) {
        (void)v;
        ++row_count[static_cast<std::size_t>(r)];
        row_cols[static_cast<std::size_t>(r)].push_back(i);
      }
    }
    // Eliminate singleton rows to discover a triangular ordering.
    std::vector<int> stack;
    std::vector<char> col_done(static_cast<std::size_t>(m), 0);
    std::vector<int> pivot_row(static_cast<std::size_t>(m), -1);
    std::vector<double> pivot_val(static_cast<std::size_t>(m), 0.0);
    std::vector<char> row_used(static_cast<std::size_t>(m), 0);
    for (int r = 0; r < m; ++r) {
      if (row_count[static_cast<std::size_t>(r)] == 1) stack.push_back(r);
    }
    std::vector<int> order;
    order.reserve(static_cast<std::size_t>(m));
    while (!stack.empty()) {
      const int r = stack.back();
      stack.pop_back();
      if (row_used[static_cast<std::size_t>(r)] || row_count[static_cast<std::size_t>(r)] != 1) continue;
      int pc = -1;
      for (int c : row_cols[static_cast<std::size_t>(r)]) {
        if (!col_done[static_cast<std::size_t>(c)]) {
          pc = c;
          break;
        }
      }
      if (pc < 0) continue;
      double pv = 0.0;
      for (const auto& [rr, v] : bcols[static_cast<std::size_t>(pc)]) {
        if (rr == r) pv = v;
      }
      if (std::abs(pv) < 1e-12) return false;
      row_used[static_cast<std::size_t>(r)] = 1;
      col_done[static_cast<std::size_t>(pc)] = 1;
      pivot_row[static_cast<std::size_t>(pc)] = r;
      pivot_val[static_cast<std::size_t>(pc)] = pv;
      order.push_back(pc);
      for (const auto& [rr, v] : bcols[static_cast<std::size_t>(pc)]) {
        (void)v;
        if (row_used[static_cast<std::size_t>(rr)]) continue;
        if (--row_count[static_cast<std::size_t>(rr)] == 1) stack.push_back(rr);
      }
    }
    if (static_cast<int>(order.size()) != m) return false;

    // Solve B x = e_k for each k following the elimination order; the column
    // discovered at step t only depends on columns discovered before it.
    Eigen::VectorXd rhs(m);
    for (int k = 0; k < m; ++k) {
      rhs.setZero();
      rhs(k) = 1.0;
      for (int c : order) {
        const int r = pivot_row[static_cast<std::size_t>(c)];
        const double x = rhs(r) / pivot_val[static_cast<std::size_t>(c)];
        binv_(c, k) = x;
        if (x != 0.0) {
          for (const auto& [rr, v] : bcols[static_cast<std::size_t>(c)]) {
            rhs(rr) -= v * x;
          }
        }
      }
    }
    return true;
  }

  void set_phase1_costs() {
    cost_.assign(static_cast<std::size_t>(total_cols()), 0.0);
    for (int j = ncols_; j < total_cols(); ++j) cost_[static_cast<std::size_t>(j)] = 1.0;
  }

  void set_phase2_costs() {
    cost_.assign(static_cast<std::size_t>(total_cols()), 0.0);
    for (int j = 0; j < n_; ++j) cost_[static_cast<std::size_t>(j)] = cost_full_[static_cast<std::size_t>(j)];
    // pin any lingering artificials
    for (int j = ncols_; j < total_cols(); ++j) set_col_bounds(j, 0.0, 0.0);
  }

  Eigen::VectorXd dual_vector() const {
    Eigen::VectorXd cb(m_);
    for (int i = 0; i < m_; ++i) cb(i) = cost_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(i)])];
    return binv_.transpose() * cb;
  }

  void refresh_duals() {
    const Eigen::VectorXd y = dual_vector();
    d_.resize(total_cols());
    for (int j = 0; j < total_cols(); ++j) {
      d_(j) = cost_[static_cast<std::size_t>(j)] - col_dot(j, y);
    }
    for (int i = 0; i < m_; ++i) d_(basis_[static_cast<std::size_t>(i)]) = 0.0;
    devex_ = Eigen::VectorXd::Ones(total_cols());  // fresh reference framework
  }

  double phase_objective() const {
    double z = 0.0;
    for (int i = 0; i < m_; ++i) z += cost_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(i)])] * xb_(i);
    for (int j = 0; j < total_cols(); ++j) {
      if (vstat_[static_cast<std::size_t>(j)] != kBasic) {
        z += cost_[static_cast<std::size_t>(j)] * xval_[static_cast<std::size_t>(j)];
      }
    }
    return z;
  }

  double infeasibility_tol() const {
    return 10.0 * feas_tol_ * (1.0 + b_.cwiseAbs().maxCoeff());
  }

  void throw_iteration_limit() const {
    throw IterationLimitError("simplex exceeded max_iterations=" + std::to_string(max_iter_));
  }

  // Devex pricing: largest d_j^2 / reference weight; exact ties to the lowest
  // index.  In Bland mode: the lowest eligible index outright.  Columns in
  // banned_ (numerically unusable pivots this iteration) are skipped.
  int price() {
    int best = -1;
    double best_score = 0.0;
    saw_banned_ = false;
    for (int j = 0; j < total_cols(); ++j) {
      const signed char st = vstat_[static_cast<std::size_t>(j)];
      if (st == kBasic) continue;
      if (col_lo(j) == col_up(j)) continue;  // fixed
      const double dj = d_(j);
      double viol = 0.0;
      if (st == kAtLower || st == kFreeNonbasic) viol = std::max(viol, -dj);
      if (st == kAtUpper || st == kFreeNonbasic) viol = std::max(viol, dj);
      if (viol <= feas_tol_) continue;
      if (!banned_.empty() && banned_[static_cast<std::size_t>(j)]) {
        saw_banned_ = true;
        continue;
      }
      if (bland_) return j;
      const double score = viol * viol / devex_(j);
      if (score > best_score) {
        best_score = score;
        best = j;
      }
    }
    return best;
  }

  std::vector<char> banned_;
  bool saw_banned_ = false;

  RunOutcome run() {
    Eigen::VectorXd w(m_);
    long since_check = 0;
    long stall_iter = iterations_;
    double stall_obj = phase_objective();
    int bans = 0;
    bool refactored_for_bans = false;
    banned_.clear();
    while (true) {
      const int q = price();
      if (q < 0) {
        if (!saw_banned_) return RunOutcome::kOptimal;
        // every remaining candidate was numerically unusable: refactorize
        // once for fresh pivot values, then accept numerical optimality
        if (refactored_for_bans) return RunOutcome::kOptimal;
        refactored_for_bans = true;
        if (!factorize()) throw SingularBasisError{};
        xb_ = binv_ * beff_;
        refresh_duals();
        banned_.clear();
        bans = 0;
        continue;
      }
      if (iterations_ >= max_iter_) return RunOutcome::kIterLimit;
      ++iterations_;
      if (iterations_ - stall_iter >= 500) {
        const double obj = phase_objective();
        if (obj > stall_obj - 1e-9 * (1.0 + std::abs(stall_obj))) {
          bland_ = true;  // no measurable progress: anti-cycling mode
        }
        if (trace_) {
          std::fprintf(stderr, "lp: iter=%ld obj=%.12g bland=%d\n", iterations_, obj,
                       static_cast<int>(bland_));
        }
        stall_obj = obj;
        stall_iter = iterations_;
      }

      const signed char stq = vstat_[static_cast<std::size_t>(q)];
      const double dq = d_(q);
      const double dir = (stq == kAtUpper || (stq == kFreeNonbasic && dq > 0.0)) ? -1.0 : 1.0;

      ftran(q, w);

      // Harris-style two-pass ratio test on x_B(i) - dir*t*w(i).
      double t_limit = kInf;
      const double rel = feas_tol_;
      for (int i = 0; i < m_; ++i) {
        const double delta = dir * w(i);
        if (std::abs(delta) <= kPivotEps) continue;
        const int bj = basis_[static_cast<std::size_t>(i)];
        if (delta > 0.0) {
          const double lo = col_lo(bj);
          if (std::isfinite(lo)) t_limit = std::min(t_limit, (xb_(i) - lo + rel) / delta);
        } else {
          const double up = col_up(bj);
          if (std::isfinite(up)) t_limit = std::min(t_limit, (xb_(i) - up - rel) / delta);
        }
      }
      double t_flip = kInf;
      if (stq != kFreeNonbasic) {
        const double lo = col_lo(q), up = col_up(q);
        if (std::isfinite(lo) && std::isfinite(up)) t_flip = up - lo;
      }

      if (!std::isfinite(t_limit) && !std::isfinite(t_flip)) {
        unbounded_q_ = q;
        unbounded_dir_ = dir;
        unbounded_w_ = w;
        return RunOutcome::kUnbounded;
      }
      if (t_limit < 0.0) t_limit = 0.0;

      // Second pass: among rows whose exact ratio fits under the relaxed
      // limit, take the largest pivot magnitude (Bland mode: the smallest
      // ratio); exact ties go to the lowest variable index.  Rows with a
      // pivot below kStrongPivot are considered only when nothing better
      // exists.
      int r = -1;
      double t_chosen = kInf;
      if (std::isfinite(t_limit)) {
        for (const double piv_floor : {kStrongPivot, kPivotEps}) {
          double best_piv = 0.0;
          for (int i = 0; i < m_; ++i) {
            const double delta = dir * w(i);
            if (std::abs(delta) <= piv_floor) continue;
            const int bj = basis_[static_cast<std::size_t>(i)];
            double ti;
            if (delta > 0.0) {
              const double lo = col_lo(bj);
              if (!std::isfinite(lo)) continue;
              ti = (xb_(i) - lo) / delta;
            } else {
              const double up = col_up(bj);
              if (!std::isfinite(up)) continue;
              ti = (xb_(i) - up) / delta;
            }
            if (ti < 0.0) ti = 0.0;
            if (ti > t_limit) continue;
            const double piv = std::abs(delta);
            bool better;
            if (bland_) {
              better = r < 0 || ti < t_chosen - 1e-15 ||
                       (ti <= t_chosen + 1e-15 && bj < basis_[static_cast<std::size_t>(r)]);
            } else {
              better = r < 0 || piv > best_piv * (1.0 + 1e-12) ||
                       (piv >= best_piv * (1.0 - 1e-12) &&
                        bj < basis_[static_cast<std::size_t>(r)]);
            }
            if (better) {
              r = i;
              t_chosen = ti;
              best_piv = piv;
            }
          }
          if (r >= 0) break;
        }
      }

      double step;
      bool do_flip = false;
      if (r >= 0) {
        if (t_flip < t_chosen) {
          do_flip = true;
          step = t_flip;
        } else {
          step = t_chosen;
        }
      } else {
        do_flip = true;
        step = t_flip;
      }
      if (!do_flip && std::abs(w(r)) < kStrongPivot) {
        if (bans < 64) {
          // entering column nearly parallel to the basis: try another
          if (banned_.empty()) banned_.assign(static_cast<std::size_t>(total_cols()), 0);
          banned_[static_cast<std::size_t>(q)] = 1;
          ++bans;
          continue;
        }
        if (!refactored_for_bans) {
          // only tiny pivots on offer: suspect a stale inverse
          refactored_for_bans = true;
          if (!factorize()) throw SingularBasisError{};
          xb_ = binv_ * beff_;
          refresh_duals();
          banned_.clear();
          bans = 0;
          continue;
        }
      }

      if (step <= 1e-9) {
        if (++degenerate_streak_ > kBlandAfter) bland_ = true;
      } else {
        degenerate_streak_ = 0;
        bland_ = false;
      }

      if (bans > 0) {
        banned_.clear();
        bans = 0;
      }
      if (do_flip) {
        // entering variable jumps to its other bound; basis unchanged
        xb_.noalias() -= (dir * step) * w;
        const double newv = xval_[static_cast<std::size_t>(q)] + dir * step;
        xval_[static_cast<std::size_t>(q)] = newv;
        vstat_[static_cast<std::size_t>(q)] = dir > 0.0 ? kAtUpper : kAtLower;
        add_to_beff(q, -dir * step);
        continue;
      }

      pivot(q, r, dir, step, w);

      if (++since_check >= kCheckInterval) {
        since_check = 0;
        sanity_refresh();
      }
    }
  }

  int unbounded_q_ = -1;
  double unbounded_dir_ = 1.0;
  Eigen::VectorXd unbounded_w_;

  // beff += scale * a_j
  void add_to_beff(int j, double scale) {
    const double delta_x = scale;
    if (delta_x == 0.0) return;
    if (is_artificial(j)) {
      beff_(artif_row_[static_cast<std::size_t>(j - ncols_)]) +=
          delta_x * artif_sign_[static_cast<std::size_t>(j - ncols_)];
      return;
    }
    for (int k = col_ptr_[static_cast<std::size_t>(j)]; k < col_ptr_[static_cast<std::size_t>(j) + 1]; ++k) {
      beff_(row_idx_[static_cast<std::size_t>(k)]) += delta_x * val_[static_cast<std::size_t>(k)];
    }
  }

  void pivot(int q, int r, double dir, double step, const Eigen::VectorXd& w) {
    const int leaving = basis_[static_cast<std::size_t>(r)];
    const double wr = w(r);
    const double entering_value = xval_[static_cast<std::size_t>(q)] + dir * step;

    // basic values
    xb_.noalias() -= (dir * step) * w;
    // leaving variable rests at the bound it hit; in degenerate forced pivots
    // (artificial expulsion) the hit side can be infinite, so fall back to
    // the finite bound the variable currently sits on.
    const double delta = dir * wr;
    double leave_to = delta > 0.0 ? col_lo(leaving) : col_up(leaving);
    signed char leave_stat = delta > 0.0 ? kAtLower : kAtUpper;
    if (!std::isfinite(leave_to)) {
      const double alt = delta > 0.0 ? col_up(leaving) : col_lo(leaving);
      if (std::isfinite(alt)) {
        leave_to = alt;
        leave_stat = delta > 0.0 ? kAtUpper : kAtLower;
      } else {
        leave_to = 0.0;
        leave_stat = kFreeNonbasic;
      }
    }
    vstat_[static_cast<std::size_t>(leaving)] = leave_stat;
    xval_[static_cast<std::size_t>(leaving)] = leave_to;

    // beff = b - sum over nonbasic columns of a_j * xval_j
    add_to_beff(q, xval_[static_cast<std::size_t>(q)]);  // q stops being nonbasic
    add_to_beff(leaving, -leave_to);                     // leaving joins the nonbasic set

    basis_[static_cast<std::size_t>(r)] = q;
    vstat_[static_cast<std::size_t>(q)] = kBasic;
    xb_(r) = entering_value;

    // Pivot-row products drive both the reduced-cost update and the Devex
    // reference-weight update.
    const Eigen::VectorXd rho = binv_.row(r).transpose();
    const double ratio = d_(q) / wr;
    const double devex_q = devex_(q);
    alpha_.resize(total_cols());
    for (int j = 0; j < total_cols(); ++j) {
      if (vstat_[static_cast<std::size_t>(j)] == kBasic) continue;
      if (col_lo(j) == col_up(j)) continue;
      const double aj = col_dot(j, rho);
      d_(j) -= ratio * aj;
      const double cand = (aj / wr) * (aj / wr) * devex_q;
      if (cand > devex_(j)) devex_(j) = cand;
    }
    d_(q) = 0.0;
    d_(leaving) = -ratio;
    devex_(leaving) = std::max(devex_q / (wr * wr), 1.0);

    Eigen::VectorXd u = w / wr;  // u = (w - e_r) / wr
    u(r) -= 1.0 / wr;
    for (int k = 0; k < m_; ++k) {
      const double rk = rho(k);
      if (rk != 0.0) binv_.col(k).noalias() -= rk * u;
    }
  }

  double basic_residual() const {
    Eigen::VectorXd resid = beff_;
    for (int i = 0; i < m_; ++i) {
      const int j = basis_[static_cast<std::size_t>(i)];
      const double x = xb_(i);
      if (x == 0.0) continue;
      if (is_artificial(j)) {
        resid(artif_row_[static_cast<std::size_t>(j - ncols_)]) -=
            x * artif_sign_[static_cast<std::size_t>(j - ncols_)];
      } else {
        for (int k = col_ptr_[static_cast<std::size_t>(j)]; k < col_ptr_[static_cast<std::size_t>(j) + 1]; ++k) {
          resid(row_idx_[static_cast<std::size_t>(k)]) -= x * val_[static_cast<std::size_t>(k)];
        }
      }
    }
    return resid.cwiseAbs().maxCoeff();
  }

  // Detects numerical drift and refactorizes when needed.
  void sanity_refresh() {
    const double resid = basic_residual();
    if (trace_ && resid > 1e-9) std::fprintf(stderr, "lp: drift %.3e at iter=%ld\n", resid, iterations_);
    if (resid > 3e-9 * (1.0 + b_.cwiseAbs().maxCoeff())) {
      if (!factorize()) throw SingularBasisError{};
      xb_ = binv_ * beff_;
      refresh_duals();
    }
  }

  // After phase 1: swap basic artificials for structural/slack columns, or pin
  // them at zero when their row is linearly dependent.
  void expel_artificials() {
    for (int i = 0; i < m_; ++i) {
      const int bj = basis_[static_cast<std::size_t>(i)];
      if (!is_artificial(bj)) continue;
      const Eigen::VectorXd rho = binv_.row(i).transpose();
      int found = -1;
      double found_mag = 0.0;
      for (int j = 0; j < ncols_; ++j) {
        if (vstat_[static_cast<std::size_t>(j)] != kBasic) {
          const double a = col_dot(j, rho);
          if (std::abs(a) > std::max(1e-7, found_mag)) {
            found = j;
            found_mag = std::abs(a);
          }
        }
      }
      if (found < 0) continue;  // dependent row; artificial stays pinned at 0
      Eigen::VectorXd w(m_);
      ftran(found, w);
      if (std::abs(w(i)) < 1e-9) continue;
      pivot(found, i, 1.0, 0.0, w);
    }
  }

  LpSolution extract_optimal() {
    sanity_refresh();
    LpSolution sol;
    sol.status = LpStatus::Optimal;
    sol.primal = Eigen::VectorXd::Zero(n_);
    for (int j = 0; j < n_; ++j) {
      if (vstat_[static_cast<std::size_t>(j)] != kBasic) sol.primal(j) = xval_[static_cast<std::size_t>(j)];
    }
    for (int i = 0; i < m_; ++i) {
      const int j = basis_[static_cast<std::size_t>(i)];
      if (j < n_) sol.primal(j) = xb_(i);
    }
    double value = 0.0;
    for (int j = 0; j < n_; ++j) value += cost_full_[static_cast<std::size_t>(j)] * sol.primal(j);
    sol.value = value;
    sol.dual = dual_vector();
    sol.iterations = iterations_;
    sol.basis.resize(static_cast<std::size_t>(m_));
    for (int i = 0; i < m_; ++i) {
      const int j = basis_[static_cast<std::size_t>(i)];
      sol.basis[static_cast<std::size_t>(i)] = is_artificial(j) ? n_ + i : j;
    }
    return sol;
  }

  LpSolution extract_infeasible() {
    LpSolution sol;
    sol.status = LpStatus::Infeasible;
    sol.value = kInf;
    sol.primal = Eigen::VectorXd::Zero(n_);
    sol.dual = dual_vector();  // phase-1 multipliers: Farkas-type certificate
    sol.iterations = iterations_;
    have_state_ = false;
    return sol;
  }

  LpSolution extract_unbounded() {
    LpSolution sol;
    sol.status = LpStatus::Unbounded;
    sol.value = -kInf;
    sol.primal = Eigen::VectorXd::Zero(n_);
    sol.dual = Eigen::VectorXd::Zero(m_);
    sol.ray = Eigen::VectorXd::Zero(n_);
    if (unbounded_q_ >= 0 && unbounded_q_ < n_) sol.ray(unbounded_q_) = unbounded_dir_;
    for (int i = 0; i < m_; ++i) {
      const int j = basis_[static_cast<std::size_t>(i)];
      if (j < n_) sol.ray(j) = -unbounded_dir_ * unbounded_w_(i);
    }
    sol.iterations = iterations_;
    have_state_ = false;
    return sol;
  }
};

}  // namespace detail

SimplexSolver::SimplexSolver(LinearProgram lp) : lp_(std::move(lp)) {
  core_ = std::make_unique<detail::SimplexCore>(lp_);
}
SimplexSolver::~SimplexSolver() = default;
SimplexSolver::SimplexSolver(SimplexSolver&&) noexcept = default;
SimplexSolver& SimplexSolver::operator=(SimplexSolver&&) noexcept = default;

LpSolution SimplexSolver::solve(const SimplexOptions& opts) { return core_->solve(opts); }

LpSolution SimplexSolver::resolve_with_objective(const Eigen::VectorXd& objective,
                                                 const SimplexOptions& opts) {
  if (objective.size() != lp_.num_vars()) {
    throw std::invalid_argument("resolve_with_objective: objective size mismatch");
  }
  lp_.objective = objective;
  core_->set_objective(objective);
  return core_->solve(opts);
}

LpSolution solve_lp(const LinearProgram& lp, const SimplexOptions& opts) {
  detail::SimplexCore core(lp);
  return core.solve(opts);
}

LpSolution solve_lp(const LinearProgram& lp, double tol) {
  SimplexOptions opts;
  opts.feas_tol = tol;
  return solve_lp(lp, opts);
}

}  // namespace bdr
