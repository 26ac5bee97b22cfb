#pragma once

#include <vector>

#include "zsirl/game.hpp"
#include "zsirl/reward.hpp"
#include "zsirl/types.hpp"

namespace zsirl {

struct MatrixGameSolution {
  Vector strategy1;  // row player, maximiser
  Vector strategy2;  // column player, minimiser
  double value = 0.0;
};

// Minimax solution of the zero-sum matrix game with the given payoff to the
// row player. The payoff is shifted to be >= 1 and the column player's LP
//   max 1'y  s.t.  A y <= 1,  y >= 0
// is solved by Bland-rule simplex; the row player's strategy is read off the
// duals of the same tableau, so ties are broken deterministically.
MatrixGameSolution solve_matrix_game(const Matrix& payoff, double tol = 1e-9);

struct MinimaxOptions {
  double tol = 1e-8;
  int max_iters = 10000;
  Execution execution = Execution::Parallel;
};

struct MinimaxResult {
  Bipolicy bipolicy;
  Vector values;
  int iterations = 0;
  double residual = 0.0;
  // Sup-norm change of V at every sweep.
  std::vector<double> residual_history;
};

// Auxiliary single-stage game of state s: Q(a1,a2) = r(s,a1,a2) + gamma sum p V.
Matrix stage_game(const MarkovGame& game, const RewardVector& rewards, const Vector& values, double gamma, int s);

// Shapley value iteration. Every sweep solves all per-state matrix games
// against the previous sweep's values (Jacobi order), so the serial and
// OpenMP paths agree bit for bit. Stops when the sup-norm change drops below
// tol; the strategies come from the final sweep. Throws SolverError after
// max_iters sweeps.
MinimaxResult minimax_bipolicy(const MarkovGame& game, const RewardVector& rewards, double gamma,
                               const MinimaxOptions& options = {});

// V = (I - gamma G)^{-1} r_bar where r_bar is the expected stage reward.
Vector evaluate_bipolicy(const MarkovGame& game, const RewardVector& rewards, const Bipolicy& bipolicy,
                         double gamma);

// Largest value improvement either player gets by switching, in every state,
// to one fixed pure action while the opponent keeps its policy.
struct DeviationAudit {
  double max_gain = 0.0;
  Player player = Player::One;
  int action = 0;
  int state = 0;
};

DeviationAudit audit_deviations(const MarkovGame& game, const RewardVector& rewards, const Bipolicy& bipolicy,
                                double gamma);

}  // namespace zsirl
