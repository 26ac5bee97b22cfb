#include "zsirl/lp.hpp"

#include <cmath>
#include <string>

namespace zsirl {

std::string_view to_string(LpStatus status) {
  switch (status) {
    case LpStatus::Optimal: return "Optimal";
    case LpStatus::Infeasible: return "Infeasible";
    case LpStatus::Unbounded: return "Unbounded";
    case LpStatus::IterationLimit: return "IterationLimit";
  }
  return "?";
}

void LinearProgram::validate() const {
  if (a.rows() != b.size() || static_cast<std::size_t>(a.rows()) != sense.size()) {
    throw DimensionError("linear program: row counts of a, b and sense differ");
  }
  if (a.cols() != objective.size()) throw DimensionError("linear program: objective length differs from columns");
  if (!a.allFinite() || !b.allFinite() || !objective.allFinite()) {
    throw ValidationError("linear program has non-finite data");
  }
}

namespace {

using Tableau = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class Simplex {
 public:
  Simplex(const LinearProgram& lp, double tol, int max_pivots) : lp_(lp), tol_(tol), max_pivots_(max_pivots) {
    const int m = static_cast<int>(lp.a.rows());
    const int n = static_cast<int>(lp.a.cols());
    sign_.assign(m, 1.0);
    std::vector<ConstraintSense> sense = lp.sense;
    int num_slack = 0;
    int num_art = 0;
    for (int i = 0; i < m; ++i) {
      if (lp.b(i) < 0.0) {
        sign_[i] = -1.0;
        if (sense[i] == ConstraintSense::LessEqual) {
          sense[i] = ConstraintSense::GreaterEqual;
        } else if (sense[i] == ConstraintSense::GreaterEqual) {
          sense[i] = ConstraintSense::LessEqual;
        }
      }
      if (sense[i] != ConstraintSense::Equal) ++num_slack;
      if (sense[i] != ConstraintSense::LessEqual) ++num_art;
    }
    cols_ = n + num_slack + num_art;
    rhs_ = cols_;
    t_ = Tableau::Zero(m, cols_ + 1);
    basis_.assign(m, -1);
    identity_col_.assign(m, -1);
    artificial_.assign(cols_, false);

    int next_slack = n;
    int next_art = n + num_slack;
    for (int i = 0; i < m; ++i) {
      t_.row(i).head(n) = sign_[i] * lp.a.row(i);
      t_(i, rhs_) = sign_[i] * lp.b(i);
      switch (sense[i]) {
        case ConstraintSense::LessEqual:
          t_(i, next_slack) = 1.0;
          basis_[i] = identity_col_[i] = next_slack++;
          break;
        case ConstraintSense::GreaterEqual:
          t_(i, next_slack++) = -1.0;
          [[fallthrough]];
        case ConstraintSense::Equal:
          t_(i, next_art) = 1.0;
          artificial_[next_art] = true;
          basis_[i] = identity_col_[i] = next_art++;
          break;
      }
    }
    num_art_ = num_art;
  }

  LpSolution run() {
    LpSolution out;
    const int m = static_cast<int>(t_.rows());
    const int n = static_cast<int>(lp_.a.cols());

    if (num_art_ > 0) {
      Vector cost = Vector::Zero(cols_);
      for (int j = 0; j < cols_; ++j)
        if (artificial_[j]) cost(j) = -1.0;
      const LpStatus phase1 = optimize(cost, false);
      if (phase1 == LpStatus::IterationLimit) return finish(out, phase1);
      const double infeasibility = obj_(rhs_);
      const double scale = 1.0 + (m ? lp_.b.cwiseAbs().maxCoeff() : 0.0);
      if (infeasibility > tol_ * scale) return finish(out, LpStatus::Infeasible);
      for (int i = 0; i < m; ++i) {
        if (!artificial_[basis_[i]]) continue;
        for (int j = 0; j < cols_; ++j) {
          if (!artificial_[j] && std::abs(t_(i, j)) > tol_) {
            pivot(i, j);
            break;
          }
        }
      }
    }

    Vector cost = Vector::Zero(cols_);
    cost.head(n) = lp_.objective;
    const LpStatus phase2 = optimize(cost, true);
    if (phase2 != LpStatus::Optimal) return finish(out, phase2);

    out.x = Vector::Zero(n);
    for (int i = 0; i < m; ++i)
      if (basis_[i] < n) out.x(basis_[i]) = std::max(0.0, t_(i, rhs_));
    out.objective = lp_.objective.dot(out.x);
    out.duals = Vector::Zero(m);
    for (int i = 0; i < m; ++i) out.duals(i) = -sign_[i] * obj_(identity_col_[i]);
    out.reduced_costs = lp_.objective - lp_.a.transpose() * out.duals;
    return finish(out, LpStatus::Optimal);
  }

 private:
  LpSolution& finish(LpSolution& out, LpStatus status) {
    out.status = status;
    out.pivots = pivots_;
    return out;
  }

  // Maximises cost'x from the current basis; obj_ holds reduced costs and,
  // in the rhs slot, minus the objective value.
  LpStatus optimize(const Vector& cost, bool ban_artificial) {
    const int m = static_cast<int>(t_.rows());
    obj_ = Vector::Zero(cols_ + 1);
    obj_.head(cols_) = cost;
    for (int i = 0; i < m; ++i) obj_ -= cost(basis_[i]) * t_.row(i).transpose();

    while (true) {
      int enter = -1;
      for (int j = 0; j < cols_; ++j) {
        if (ban_artificial && artificial_[j]) continue;
        if (obj_(j) > tol_) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return LpStatus::Optimal;

      int leave = -1;
      double best = 0.0;
      for (int i = 0; i < m; ++i) {
        const double coef = t_(i, enter);
        if (coef <= tol_) continue;
        const double ratio = t_(i, rhs_) / coef;
        if (leave < 0 || ratio < best - 1e-12 || (std::abs(ratio - best) <= 1e-12 && basis_[i] < basis_[leave])) {
          leave = i;
          best = ratio;
        }
      }
      if (leave < 0) return LpStatus::Unbounded;
      if (pivots_ >= max_pivots_) return LpStatus::IterationLimit;
      pivot(leave, enter);
    }
  }

  void pivot(int row, int col) {
    t_.row(row) /= t_(row, col);
    for (int i = 0; i < t_.rows(); ++i) {
      if (i == row) continue;
      const double f = t_(i, col);
      if (f != 0.0) t_.row(i) -= f * t_.row(row);
    }
    if (obj_.size() == t_.cols()) {
      const double f = obj_(col);
      if (f != 0.0) obj_ -= f * t_.row(row).transpose();
    }
    basis_[row] = col;
    ++pivots_;
  }

  const LinearProgram& lp_;
  double tol_;
  int max_pivots_;
  int cols_ = 0;
  int rhs_ = 0;
  int num_art_ = 0;
  int pivots_ = 0;
  Tableau t_;
  Vector obj_;
  std::vector<double> sign_;
  std::vector<int> basis_;
  std::vector<int> identity_col_;
  std::vector<bool> artificial_;
};

}  // namespace

LpSolution solve_lp(const LinearProgram& lp, double tol, int max_pivots) {
  lp.validate();
  return Simplex(lp, tol, max_pivots).run();
}

}  // namespace zsirl
