#pragma once

#include <vector>

#include "zsirl/game.hpp"
#include "zsirl/mirl.hpp"
#include "zsirl/reward.hpp"

namespace zsirl {

// Player 1's MDP once player 2's policy is folded into the dynamics.
// Kernel rows are indexed a1*N + s.
struct InducedMdp {
  int num_states = 0;
  int num_actions = 0;
  SparseMatrix kernel;
  double gamma = 0.0;

  Eigen::Index row(int s, int a1) const { return IndexScheme::state_action(s, a1, num_states); }
};

InducedMdp induce_mdp(const MarkovGame& game, const Matrix& pi2, double gamma);

// Optimality of the observed pi1 in the induced MDP: for every action i
//   (F_i - C_{a1=i}) r >= 0,
// M blocks of N rows over StateAction rewards. With StateOnly the rewards are
// taken as r(s,a1) = x(s) and each block collapses to
//   gamma (G - G_{pi2|a1=i}) (I - gamma G)^{-1} x >= 0.
ConstraintSystem irl_constraints(const MarkovGame& game, const Bipolicy& observed, double gamma,
                                 RewardLayout layout = RewardLayout::StateAction,
                                 Execution execution = Execution::Parallel);

// Throws InfeasibleError when the observed pi1 is optimal for no reward.
RecoveryResult recover_irl_rewards(const MarkovGame& game, const Bipolicy& observed, const Prior& prior,
                                   double gamma, RewardLayout layout = RewardLayout::StateAction,
                                   const RecoveryOptions& options = {});

struct MdpSolution {
  Matrix policy;  // pure, greedy with lowest-index ties
  Vector values;
  int iterations = 0;
};

// Value iteration on the induced MDP with StateOnly or StateAction rewards.
MdpSolution solve_mdp(const InducedMdp& mdp, const RewardVector& rewards, double tol = 1e-10,
                      int max_iters = 100000);

// Exact value of a (possibly mixed) player-1 policy in the induced MDP.
Vector evaluate_mdp_policy(const InducedMdp& mdp, const RewardVector& rewards, const Matrix& policy);

struct PssEstimate {
  Player player = Player::One;
  // Per square, index square - 1. NaN where the player never holds the ball.
  std::vector<double> estimate;
  std::vector<double> truth;
  double mean_abs_error = 0.0;
};

// Shot reward averaged over every state where `player` holds the ball on a
// square (and over the opponent's actions). Player 1 reads r(s, shoot, .);
// player 2 reads -r(s, ., shoot), which needs joint rewards.
PssEstimate extract_pss(const RewardVector& rewards, const MarkovGame& game, Player player = Player::One);

}  // namespace zsirl
