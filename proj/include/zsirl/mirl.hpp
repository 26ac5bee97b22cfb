#pragma once

#include <memory>
#include <vector>

#include "zsirl/game.hpp"
#include "zsirl/prior.hpp"
#include "zsirl/qp.hpp"
#include "zsirl/reward.hpp"

namespace zsirl {

// Which deviation a constraint row encodes: `deviator` switches to `action`
// in every state and the row is the comparison at `state`.
struct RowTag {
  Player deviator = Player::One;
  int action = 0;
  int state = 0;
};

// Linear constraints sense_i(A_i r) >= or <= rhs_i on a reward vector.
struct ConstraintSystem {
  RewardLayout layout = RewardLayout::StateOnly;
  std::shared_ptr<const ConstraintMatrix> matrix;
  std::vector<RowSense> sense;
  std::vector<RowTag> tags;
  Vector rhs;  // empty means zero

  Eigen::Index rows() const { return matrix ? matrix->rows() : 0; }
  // Signed slack per row: A_i r - rhs_i for >= rows, rhs_i - A_i r for <=
  // rows. Non-negative means satisfied.
  Vector residuals(const Vector& r) const;
  double min_residual(const Vector& r) const;
};

// State-only rewards. For every player-1 action i
//   (G - G_{pi2|a1=i}) (I - gamma G)^{-1} r >= 0
// and for every player-2 action j
//   (G - G_{pi1|a2=j}) (I - gamma G)^{-1} r <= 0,
// 2*M blocks of N rows, blocks built in parallel.
ConstraintSystem state_reward_constraints(const MarkovGame& game, const Bipolicy& observed, double gamma,
                                          Execution execution = Execution::Parallel);

// Joint-action rewards through D = I + gamma P (I - gamma G)^{-1} B:
//   (B_{pi2|a1=i} - B) D r <= 0,  (B_{pi1|a2=j} - B) D r >= 0.
// Each block equals (B_dev - B) + gamma (G_dev - G)(I - gamma G)^{-1} B, which
// is stored as sparse + dense * sparse so the N*M*M square D is never formed.
ConstraintSystem joint_reward_constraints(const MarkovGame& game, const Bipolicy& observed, double gamma,
                                          Execution execution = Execution::Parallel);

// Requires rows whose deviating action lies outside the deviator's observed
// support to hold with slack `margin` (rows that vanish are left alone). With
// margin > 0 the observed supports must be exactly the best responses.
void apply_support_margin(ConstraintSystem& system, const Bipolicy& observed, double margin);

struct RecoveryOptions {
  QpOptions qp;
  double support_margin = 0.0;
  Execution execution = Execution::Parallel;
};

struct RecoveryResult {
  RewardVector rewards;
  QpSolution qp;
  // Smallest constraint slack at the recovered rewards.
  double min_residual = 0.0;
  Eigen::Index num_constraints = 0;
};

// Throws InfeasibleError when no reward satisfies the constraints.
RecoveryResult recover_state_rewards(const MarkovGame& game, const Bipolicy& observed, const Prior& prior,
                                     double gamma, const RecoveryOptions& options = {});
RecoveryResult recover_joint_rewards(const MarkovGame& game, const Bipolicy& observed, const Prior& prior,
                                     double gamma, const RecoveryOptions& options = {});

// r(s,a1) = sum_{a2} r(s,a1,a2) pi2(s,a2).
RewardVector marginalize_rewards(const RewardVector& joint, const Matrix& pi2);

// Shared by both inverse methods: runs the QP and packages the result.
RecoveryResult solve_recovery(const ConstraintSystem& system, const Prior& prior, int num_states, int num_actions,
                              const RecoveryOptions& options);

}  // namespace zsirl
