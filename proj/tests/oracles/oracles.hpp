#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "zsirl/game.hpp"

// Reference implementations used only by the tests. None of them call the
// library routine they check; they work from the definitions with plain
// loops, dense inverses and exhaustive enumeration.
namespace oracle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Kernel of the 2x2 soccer board (A scores on 1, B on 4, reset to A=2, B=3)
// written out case by case. Dense (32*M*M) x 32, rows (a1*M + a2)*32 + s.
Matrix small_soccer_kernel(double beta, bool shoot);

// Dense kernel of any game, for the loop oracles.
Matrix dense_kernel(const zsirl::MarkovGame& game);

// Value of a zero-sum matrix game by support enumeration: every pair of
// equal-size supports, indifference systems solved exactly, equalisation
// and best-response conditions checked.
struct GameValue {
  double value = 0.0;
  Vector x;
  Vector y;
  bool found = false;
};
GameValue support_enumeration(const Matrix& payoff, double tol = 1e-9);

// maximize c'x subject to rows (0: <=, 1: >=, 2: =) and x >= 0, by
// enumerating every vertex. Assumes a bounded feasible region.
struct LpVertex {
  bool feasible = false;
  double objective = 0.0;
  Vector x;
};
LpVertex lp_vertex_enumeration(const Vector& c, const Matrix& a, const Vector& b, const std::vector<int>& sense,
                               double tol = 1e-9);

// minimize 1/2 (r - mu)' Sigma^{-1} (r - mu) s.t. a r >= h, by trying every
// active set and keeping the one whose equality solution satisfies KKT.
struct QpVertex {
  bool feasible = false;
  Vector r;
  double objective = 0.0;
};
QpVertex qp_active_set_enumeration(const Vector& mu, const Matrix& sigma, const Matrix& a, const Vector& h,
                                   double tol = 1e-9);

// Eq. level loop forms of the operators.
Matrix loop_G(const Matrix& kernel, int n, int m, const Matrix& pi1, const Matrix& pi2);
Matrix loop_B(int n, int m, const Matrix& pi1, const Matrix& pi2);
Matrix loop_C(const Matrix& pi1);
Matrix loop_F(const Matrix& kernel, int n, int m, const Matrix& pi1, const Matrix& pi2, int action, double gamma);
Matrix loop_D(const Matrix& kernel, int n, int m, const Matrix& pi1, const Matrix& pi2, double gamma);
// Induced MDP kernel, rows a1*N + s.
Matrix loop_induced(const Matrix& kernel, int n, int m, const Matrix& pi2);

Matrix random_policy(int n, int m, std::uint64_t seed);

// Mean and standard error of the discounted return from `start` over
// independent rollouts of `horizon` steps. Rewards in StateJointAction order.
struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};
McEstimate monte_carlo_value(const Matrix& kernel, const Vector& joint_rewards, int n, int m, const Matrix& pi1,
                             const Matrix& pi2, double gamma, int start, int rollouts, int horizon,
                             std::uint64_t seed);

}  // namespace oracle
