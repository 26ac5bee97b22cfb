#pragma once

#include <Eigen/LU>

#include "zsirl/game.hpp"
#include "zsirl/reward.hpp"
#include "zsirl/types.hpp"

namespace zsirl {

// State transition matrix under a bipolicy:
//   g(s'|s) = sum_{a1,a2} pi1(s,a1) pi2(s,a2) p(s'|s,a1,a2).
Matrix build_G(const MarkovGame& game, const Bipolicy& bipolicy);

// Same, with player `deviator` pinned to `action` in every state while the
// other player keeps its policy.
Matrix build_G_deviation(const MarkovGame& game, const Bipolicy& bipolicy, Player deviator, int action);

// N x (N*M*M) averaging operator: (B r)(s) = sum pi1 pi2 r(s,a1,a2).
SparseMatrix build_B(const Bipolicy& bipolicy);
SparseMatrix build_B_deviation(const Bipolicy& bipolicy, Player deviator, int action);

// (N*M*M) x N kernel matrix, rows in StateJointAction order.
SparseMatrix build_P(const MarkovGame& game);

// N x (N*M) policy-averaging operator on StateAction rewards: row i holds
// pi1(i,a) at column a*N + i.
SparseMatrix build_C(const Matrix& pi1);

// Dense LU of (I - gamma G) with residual-checked solves from either side.
class Resolvent {
 public:
  Resolvent(const Matrix& transition, double gamma);

  // (I - gamma G)^{-1} rhs
  Matrix solve(const Matrix& rhs) const;
  Vector solve(const Vector& rhs) const;
  // lhs (I - gamma G)^{-1}
  Matrix right_solve(const Matrix& lhs) const;
  Matrix inverse() const;

  int size() const { return static_cast<int>(system_.rows()); }
  double gamma() const { return gamma_; }

 private:
  void check(const Matrix& solution, const Matrix& rhs, bool transposed) const;

  Matrix system_;
  Eigen::PartialPivLU<Matrix> lu_;
  double gamma_;
};

// D = I + gamma P (I - gamma G)^{-1} B, applied without materialising the
// (N*M*M)^2 matrix. D r is the joint-action Q vector of reward r under the
// bipolicy.
class DOperator {
 public:
  DOperator(const MarkovGame& game, const Bipolicy& bipolicy, double gamma);

  Vector apply(const Vector& r) const;
  // Dense form; only for N*M*M <= kMaxDense.
  Matrix dense() const;

  Eigen::Index size() const { return p_.rows(); }

  static constexpr Eigen::Index kMaxDense = 2000;

 private:
  SparseMatrix p_;
  SparseMatrix b_;
  Resolvent resolvent_;
  double gamma_;
};

Matrix build_D(const MarkovGame& game, const Bipolicy& bipolicy, double gamma);

// F_i = [gamma (G - G_{pi2|a1=i}) (I - gamma G)^{-1} + I] C_{pi1}, N x (N*M).
Matrix build_F(const MarkovGame& game, const Bipolicy& bipolicy, int action, double gamma);

// Per-state expected stage reward sum pi1 pi2 r(s,a1,a2) for any layout.
Vector expected_stage_reward(const RewardVector& rewards, const Bipolicy& bipolicy);

}  // namespace zsirl
