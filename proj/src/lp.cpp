#include "mlembed/lp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include "mlembed/error.hpp"

namespace mlembed {

const char* to_string(LpStatus status) {
  switch (status) {
    case LpStatus::optimal: return "optimal";
    case LpStatus::infeasible: return "infeasible";
    case LpStatus::unbounded: return "unbounded";
    case LpStatus::numerical: return "numerical";
  }
  return "unknown";
}

const char* to_string(RowSense sense) {
  switch (sense) {
    case RowSense::le: return "<=";
    case RowSense::eq: return "=";
    case RowSense::ge: return ">=";
  }
  return "?";
}

double LinearConstraint::activity(std::span<const double> x) const {
  double s = 0.0;
  for (const auto& t : terms) s += t.coef * x[static_cast<std::size_t>(t.var)];
  return s;
}

double LinearConstraint::violation(std::span<const double> x) const {
  const double r = activity(x) - rhs;
  switch (sense) {
    case RowSense::le: return r > 0.0 ? r : 0.0;
    case RowSense::ge: return r < 0.0 ? -r : 0.0;
    case RowSense::eq: return std::abs(r);
  }
  return 0.0;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class ColState : std::uint8_t { basic, at_lower, at_upper, free_zero };

enum class PhaseResult { optimal, unbounded, iteration_limit };

// Column layout: [ structural (n) | slack (m) | artificial (k) ].
// Row i reads  A_i x + s_i (+/- a_i) = rhs_i.
class Simplex {
 public:
  Simplex(const LpModel& model, std::span<const double> lower, std::span<const double> upper,
          const LpOptions& options)
      : model_(model), options_(options) {
    m_ = model.num_rows();
    n_ = model.num_cols();
    if (static_cast<int>(lower.size()) != n_ || static_cast<int>(upper.size()) != n_ ||
        model.rhs.size() != m_ || model.cost.size() != n_ ||
        static_cast<int>(model.sense.size()) != m_) {
      fail(ErrorKind::dimension, "solve_lp: inconsistent LP dimensions");
    }
    setup(lower, upper);
  }

  LpSolution run() {
    LpSolution sol;
    if (infeasible_bounds_) {
      sol.status = LpStatus::infeasible;
      return sol;
    }

    if (num_artificial_ > 0) {
      std::vector<double> phase1(ncols_, 0.0);
      for (int j = n_ + m_; j < ncols_; ++j) phase1[j] = 1.0;
      const PhaseResult r = iterate(phase1);
      if (r == PhaseResult::iteration_limit) {
        sol.status = LpStatus::numerical;
        sol.iterations = iterations_;
        return sol;
      }
      refactor();
      double infeasibility = 0.0;
      for (int j = n_ + m_; j < ncols_; ++j) infeasibility += std::abs(x_[j]);
      const double scale = std::max(1.0, model_.rhs.size() ? model_.rhs.cwiseAbs().maxCoeff() : 0.0);
      if (infeasibility > options_.feasibility_tol * scale) {
        sol.status = LpStatus::infeasible;
        sol.iterations = iterations_;
        return sol;
      }
      for (int j = n_ + m_; j < ncols_; ++j) {
        lo_[j] = 0.0;
        hi_[j] = 0.0;
        if (state_[j] != ColState::basic) {
          state_[j] = ColState::at_lower;
          x_[j] = 0.0;
        }
      }
    }

    std::vector<double> phase2(ncols_, 0.0);
    for (int j = 0; j < n_; ++j) phase2[j] = model_.cost[j];
    const PhaseResult r = iterate(phase2);
    sol.iterations = iterations_;
    if (r == PhaseResult::unbounded) {
      sol.status = LpStatus::unbounded;
      return sol;
    }
    if (r == PhaseResult::iteration_limit) {
      sol.status = LpStatus::numerical;
      return sol;
    }

    refactor();
    sol.x.assign(x_.begin(), x_.begin() + n_);
    // Snap structural values onto bounds they sit within rounding of.
    for (int j = 0; j < n_; ++j) {
      if (std::isfinite(lo_[j]) && std::abs(sol.x[j] - lo_[j]) <= 1e-12 * (1.0 + std::abs(lo_[j]))) {
        sol.x[j] = lo_[j];
      }
      if (std::isfinite(hi_[j]) && std::abs(sol.x[j] - hi_[j]) <= 1e-12 * (1.0 + std::abs(hi_[j]))) {
        sol.x[j] = hi_[j];
      }
    }
    if (!primal_feasible(sol.x)) {
      sol.status = LpStatus::numerical;
      return sol;
    }
    sol.objective = model_.objective_offset;
    for (int j = 0; j < n_; ++j) sol.objective += model_.cost[j] * sol.x[j];
    const Eigen::VectorXd d = reduced_costs(phase2);
    sol.reduced_costs.assign(d.data(), d.data() + n_);
    sol.status = LpStatus::optimal;
    return sol;
  }

 private:
  void setup(std::span<const double> lower, std::span<const double> upper) {
    // Structural starting values: a finite bound, else zero.
    std::vector<double> xs(n_);
    for (int j = 0; j < n_; ++j) {
      if (lower[j] > upper[j]) infeasible_bounds_ = true;
      if (std::isfinite(lower[j])) {
        xs[j] = lower[j];
      } else if (std::isfinite(upper[j])) {
        xs[j] = upper[j];
      } else {
        xs[j] = 0.0;
      }
    }
    Eigen::VectorXd residual = model_.rhs;
    for (int j = 0; j < n_; ++j) {
      if (xs[j] != 0.0) residual -= model_.A.col(j) * xs[j];
    }

    // Decide per row whether the slack can start basic.
    std::vector<double> slack_lo(m_), slack_hi(m_);
    std::vector<int> needs_art(m_, 0);
    for (int i = 0; i < m_; ++i) {
      switch (model_.sense[i]) {
        case RowSense::le: slack_lo[i] = 0.0; slack_hi[i] = kInf; break;
        case RowSense::ge: slack_lo[i] = -kInf; slack_hi[i] = 0.0; break;
        case RowSense::eq: slack_lo[i] = 0.0; slack_hi[i] = 0.0; break;
      }
      if (residual[i] < slack_lo[i] || residual[i] > slack_hi[i]) needs_art[i] = 1;
    }
    num_artificial_ = 0;
    for (int i = 0; i < m_; ++i) num_artificial_ += needs_art[i];
    ncols_ = n_ + m_ + num_artificial_;

    full_ = Eigen::MatrixXd::Zero(m_, ncols_);
    if (n_ > 0 && m_ > 0) full_.leftCols(n_) = model_.A;
    for (int i = 0; i < m_; ++i) full_(i, n_ + i) = 1.0;

    lo_.assign(ncols_, 0.0);
    hi_.assign(ncols_, 0.0);
    x_.assign(ncols_, 0.0);
    state_.assign(ncols_, ColState::at_lower);
    basis_.assign(m_, -1);

    for (int j = 0; j < n_; ++j) {
      lo_[j] = lower[j];
      hi_[j] = upper[j];
      x_[j] = xs[j];
      if (std::isfinite(lower[j])) {
        state_[j] = ColState::at_lower;
      } else if (std::isfinite(upper[j])) {
        state_[j] = ColState::at_upper;
      } else {
        state_[j] = ColState::free_zero;
      }
    }

    int art = n_ + m_;
    for (int i = 0; i < m_; ++i) {
      const int s = n_ + i;
      lo_[s] = slack_lo[i];
      hi_[s] = slack_hi[i];
      if (!needs_art[i]) {
        basis_[i] = s;
        state_[s] = ColState::basic;
        x_[s] = residual[i];
        continue;
      }
      // Slack parks at the bound nearest to the residual; the artificial
      // absorbs the remainder with a nonnegative value.
      const double park = std::clamp(residual[i], slack_lo[i], slack_hi[i]);
      x_[s] = park;
      state_[s] = (park == slack_lo[i]) ? ColState::at_lower : ColState::at_upper;
      const double rem = residual[i] - park;
      full_(i, art) = rem >= 0.0 ? 1.0 : -1.0;
      lo_[art] = 0.0;
      hi_[art] = kInf;
      x_[art] = std::abs(rem);
      basis_[i] = art;
      state_[art] = ColState::basic;
      ++art;
    }

    // Initial basis matrix is diagonal with +/-1 entries.
    tab_ = full_;
    for (int i = 0; i < m_; ++i) {
      if (full_(i, basis_[i]) < 0.0) tab_.row(i) *= -1.0;
    }
  }

  Eigen::VectorXd reduced_costs(const std::vector<double>& cost) const {
    Eigen::VectorXd cb(m_);
    for (int i = 0; i < m_; ++i) cb[i] = cost[basis_[i]];
    Eigen::VectorXd d = Eigen::Map<const Eigen::VectorXd>(cost.data(), ncols_);
    if (m_ > 0) d.noalias() -= tab_.transpose() * cb;
    return d;
  }

  PhaseResult iterate(const std::vector<double>& cost) {
    int degenerate_run = 0;
    bool bland = false;
    int since_refactor = 0;
    while (true) {
      if (iterations_ >= options_.max_iterations) return PhaseResult::iteration_limit;
      if (since_refactor >= options_.refactor_every) {
        refactor();
        since_refactor = 0;
      }
      const Eigen::VectorXd d = reduced_costs(cost);

      // Pricing.
      int enter = -1;
      int dir = 0;
      double best = 0.0;
      for (int j = 0; j < ncols_; ++j) {
        const ColState st = state_[j];
        if (st == ColState::basic || lo_[j] == hi_[j]) continue;
        int cand_dir = 0;
        if ((st == ColState::at_lower || st == ColState::free_zero) && d[j] < -options_.optimality_tol) {
          cand_dir = 1;
        } else if ((st == ColState::at_upper || st == ColState::free_zero) &&
                   d[j] > options_.optimality_tol) {
          cand_dir = -1;
        }
        if (cand_dir == 0) continue;
        if (bland) {
          enter = j;
          dir = cand_dir;
          break;
        }
        if (std::abs(d[j]) > best) {
          best = std::abs(d[j]);
          enter = j;
          dir = cand_dir;
        }
      }
      if (enter < 0) return PhaseResult::optimal;

      // Ratio test.
      double theta = kInf;
      int leave_row = -1;
      double leave_alpha = 0.0;
      for (int i = 0; i < m_; ++i) {
        const double alpha = tab_(i, enter);
        if (std::abs(alpha) <= options_.pivot_tol) continue;
        const double delta = -dir * alpha;
        const int bv = basis_[i];
        double limit;
        if (delta < 0.0) {
          if (!std::isfinite(lo_[bv])) continue;
          limit = (x_[bv] - lo_[bv]) / (-delta);
        } else {
          if (!std::isfinite(hi_[bv])) continue;
          limit = (hi_[bv] - x_[bv]) / delta;
        }
        limit = std::max(limit, 0.0);
        bool take = false;
        if (leave_row < 0 || limit < theta - 1e-12) {
          take = true;
        } else if (limit <= theta + 1e-12) {
          if (bland) {
            take = bv < basis_[leave_row];
          } else if (std::abs(alpha) > std::abs(leave_alpha) * (1.0 + 1e-9)) {
            take = true;
          } else if (std::abs(alpha) >= std::abs(leave_alpha) * (1.0 - 1e-9)) {
            take = bv < basis_[leave_row];
          }
        }
        if (take) {
          theta = limit;
          leave_row = i;
          leave_alpha = alpha;
        }
      }
      const double flip = hi_[enter] - lo_[enter];
      if (leave_row < 0 && !std::isfinite(flip)) return PhaseResult::unbounded;
      ++iterations_;

      if (leave_row < 0 || flip <= theta) {
        // Bound flip, no basis change.
        for (int i = 0; i < m_; ++i) x_[basis_[i]] -= dir * flip * tab_(i, enter);
        if (dir > 0) {
          x_[enter] = hi_[enter];
          state_[enter] = ColState::at_upper;
        } else {
          x_[enter] = lo_[enter];
          state_[enter] = ColState::at_lower;
        }
        degenerate_run = 0;
        continue;
      }

      for (int i = 0; i < m_; ++i) x_[basis_[i]] -= dir * theta * tab_(i, enter);
      const int leaving = basis_[leave_row];
      const double delta_leave = -dir * leave_alpha;
      if (delta_leave < 0.0) {
        x_[leaving] = lo_[leaving];
        state_[leaving] = ColState::at_lower;
      } else {
        x_[leaving] = hi_[leaving];
        state_[leaving] = ColState::at_upper;
      }
      x_[enter] += dir * theta;
      state_[enter] = ColState::basic;
      basis_[leave_row] = enter;
      pivot(leave_row, enter);
      ++since_refactor;

      if (theta <= 1e-12) {
        if (++degenerate_run > options_.bland_after) bland = true;
      } else {
        degenerate_run = 0;
      }
    }
  }

  void pivot(int row, int col) {
    const double p = tab_(row, col);
    tab_.row(row) /= p;
    for (int i = 0; i < m_; ++i) {
      if (i == row) continue;
      const double f = tab_(i, col);
      if (f != 0.0) tab_.row(i) -= f * tab_.row(row);
    }
  }

  // Recompute B^-1 [A | I | art] and the basic values from the original data.
  void refactor() {
    if (m_ == 0) return;
    Eigen::MatrixXd B(m_, m_);
    for (int i = 0; i < m_; ++i) B.col(i) = full_.col(basis_[i]);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
    Eigen::VectorXd rhs = model_.rhs;
    for (int j = 0; j < ncols_; ++j) {
      if (state_[j] != ColState::basic && x_[j] != 0.0) rhs -= full_.col(j) * x_[j];
    }
    Eigen::MatrixXd tab = lu.solve(full_);
    Eigen::VectorXd xb = lu.solve(rhs);
    if (!tab.allFinite() || !xb.allFinite()) return;  // keep the updated tableau
    tab_ = std::move(tab);
    for (int i = 0; i < m_; ++i) x_[basis_[i]] = xb[i];
  }

  bool primal_feasible(const std::vector<double>& x) const {
    const double tol = options_.feasibility_tol;
    for (int j = 0; j < n_; ++j) {
      if (x[j] < lo_[j] - tol * (1.0 + std::abs(lo_[j]))) return false;
      if (x[j] > hi_[j] + tol * (1.0 + std::abs(hi_[j]))) return false;
    }
    if (m_ == 0) return true;
    const Eigen::VectorXd ax = model_.A * Eigen::Map<const Eigen::VectorXd>(x.data(), n_);
    for (int i = 0; i < m_; ++i) {
      const double t = tol * (1.0 + std::abs(model_.rhs[i]));
      const double r = ax[i] - model_.rhs[i];
      switch (model_.sense[i]) {
        case RowSense::le: if (r > t) return false; break;
        case RowSense::ge: if (r < -t) return false; break;
        case RowSense::eq: if (std::abs(r) > t) return false; break;
      }
    }
    return true;
  }

  const LpModel& model_;
  LpOptions options_;
  int m_ = 0;
  int n_ = 0;
  int ncols_ = 0;
  int num_artificial_ = 0;
  int iterations_ = 0;
  bool infeasible_bounds_ = false;
  Eigen::MatrixXd full_;
  Eigen::MatrixXd tab_;
  std::vector<double> lo_, hi_, x_;
  std::vector<ColState> state_;
  std::vector<int> basis_;
};

}  // namespace

LpSolution solve_lp(const LpModel& model, const LpOptions& options) {
  return solve_lp(model, model.lower, model.upper, options);
}

LpSolution solve_lp(const LpModel& model, std::span<const double> lower,
                    std::span<const double> upper, const LpOptions& options) {
  Simplex simplex(model, lower, upper, options);
  return simplex.run();
}

}  // namespace mlembed
