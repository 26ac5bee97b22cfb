#include "zsirl/mirl.hpp"

#include <string>

#include "zsirl/operators.hpp"

namespace zsirl {

Vector ConstraintSystem::residuals(const Vector& r) const {
  Vector ar = matrix->multiply(r);
  for (Eigen::Index i = 0; i < ar.size(); ++i) {
    const double h = rhs.size() ? rhs(i) : 0.0;
    ar(i) = sense[static_cast<std::size_t>(i)] == RowSense::GreaterEqual ? ar(i) - h : h - ar(i);
  }
  return ar;
}

double ConstraintSystem::min_residual(const Vector& r) const {
  return rows() ? residuals(r).minCoeff() : 0.0;
}

namespace {

void check_inputs(const MarkovGame& game, const Bipolicy& observed, double gamma) {
  observed.validate();
  if (observed.num_states() != game.num_states() || observed.num_actions() != game.num_actions()) {
    throw DimensionError("observed bipolicy does not match the game");
  }
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ValidationError("gamma must lie in [0, 1)");
}

// Block order: player-1 deviations 0..M-1, then player-2 deviations.
struct BlockSpec {
  Player deviator;
  int action;
};

std::vector<BlockSpec> deviation_blocks(int m) {
  std::vector<BlockSpec> blocks;
  for (Player p : {Player::One, Player::Two})
    for (int a = 0; a < m; ++a) blocks.push_back({p, a});
  return blocks;
}

template <typename Fn>
void for_each_block(int count, Execution execution, Fn&& fn) {
  if (execution == Execution::Serial) {
    for (int k = 0; k < count; ++k) fn(k);
    return;
  }
  bool failed = false;
  std::string message;
#pragma omp parallel for schedule(static, 1)
  for (int k = 0; k < count; ++k) {
    try {
      fn(k);
    } catch (const std::exception& e) {
#pragma omp critical
      {
        failed = true;
        message = e.what();
      }
    }
  }
  if (failed) throw SolverError(message);
}

void fill_tags(ConstraintSystem& sys, const std::vector<BlockSpec>& blocks, int n) {
  for (const BlockSpec& b : blocks)
    for (int s = 0; s < n; ++s) sys.tags.push_back({b.deviator, b.action, s});
}

}  // namespace

ConstraintSystem state_reward_constraints(const MarkovGame& game, const Bipolicy& observed, double gamma,
                                          Execution execution) {
  check_inputs(game, observed, gamma);
  const int n = game.num_states();
  const int m = game.num_actions();
  const Matrix g = build_G(game, observed);
  const Resolvent resolvent(g, gamma);
  const auto blocks = deviation_blocks(m);

  Matrix a(static_cast<Eigen::Index>(blocks.size()) * n, n);
  for_each_block(static_cast<int>(blocks.size()), execution, [&](int k) {
    const Matrix diff = g - build_G_deviation(game, observed, blocks[k].deviator, blocks[k].action);
    a.middleRows(static_cast<Eigen::Index>(k) * n, n) = resolvent.right_solve(diff);
  });

  ConstraintSystem sys;
  sys.layout = RewardLayout::StateOnly;
  for (const BlockSpec& b : blocks)
    sys.sense.insert(sys.sense.end(), n, b.deviator == Player::One ? RowSense::GreaterEqual : RowSense::LessEqual);
  fill_tags(sys, blocks, n);
  sys.matrix = std::make_shared<DenseConstraints>(std::move(a));
  return sys;
}

ConstraintSystem joint_reward_constraints(const MarkovGame& game, const Bipolicy& observed, double gamma,
                                          Execution execution) {
  check_inputs(game, observed, gamma);
  const int n = game.num_states();
  const int m = game.num_actions();
  const Matrix g = build_G(game, observed);
  const Resolvent resolvent(g, gamma);
  const SparseMatrix b = build_B(observed);
  const auto blocks = deviation_blocks(m);
  const int count = static_cast<int>(blocks.size());

  Matrix w(static_cast<Eigen::Index>(count) * n, n);
  std::vector<SparseMatrix> delta(static_cast<std::size_t>(count));
  for_each_block(count, execution, [&](int k) {
    const Matrix diff = build_G_deviation(game, observed, blocks[k].deviator, blocks[k].action) - g;
    w.middleRows(static_cast<Eigen::Index>(k) * n, n) = gamma * resolvent.right_solve(diff);
    delta[static_cast<std::size_t>(k)] =
        SparseMatrix(build_B_deviation(observed, blocks[k].deviator, blocks[k].action) - b);
  });

  std::vector<Triplet> entries;
  for (int k = 0; k < count; ++k) {
    const SparseMatrix& d = delta[static_cast<std::size_t>(k)];
    for (Eigen::Index i = 0; i < d.outerSize(); ++i)
      for (SparseMatrix::InnerIterator it(d, i); it; ++it)
        if (it.value() != 0.0) entries.emplace_back(static_cast<Eigen::Index>(k) * n + it.row(), it.col(), it.value());
  }
  SparseMatrix s(static_cast<Eigen::Index>(count) * n, b.cols());
  s.setFromTriplets(entries.begin(), entries.end());

  ConstraintSystem sys;
  sys.layout = RewardLayout::StateJointAction;
  for (const BlockSpec& blk : blocks)
    sys.sense.insert(sys.sense.end(), n, blk.deviator == Player::One ? RowSense::LessEqual : RowSense::GreaterEqual);
  fill_tags(sys, blocks, n);
  sys.matrix = std::make_shared<SparsePlusProductConstraints>(std::move(s), std::move(w), b);
  return sys;
}

void apply_support_margin(ConstraintSystem& system, const Bipolicy& observed, double margin) {
  if (!(margin >= 0.0)) throw ValidationError("support margin must be non-negative");
  const Eigen::Index rows = system.rows();
  system.rhs = Vector::Zero(rows);
  if (margin == 0.0) return;
  const Vector row_max = system.matrix->row_max_abs();
  const double scale = rows ? row_max.maxCoeff() : 0.0;
  for (Eigen::Index i = 0; i < rows; ++i) {
    const RowTag& tag = system.tags[static_cast<std::size_t>(i)];
    if (observed.of(tag.deviator)(tag.state, tag.action) > 1e-9) continue;
    if (row_max(i) <= 1e-10 * scale) continue;
    system.rhs(i) = system.sense[static_cast<std::size_t>(i)] == RowSense::GreaterEqual ? margin : -margin;
  }
}

RecoveryResult solve_recovery(const ConstraintSystem& system, const Prior& prior, int num_states, int num_actions,
                              const RecoveryOptions& options) {
  QpProblem problem{prior.mu, prior.sigma, system.matrix, system.sense, system.rhs};
  RecoveryResult out;
  out.qp = solve_qp(problem, options.qp);
  if (out.qp.status == QpStatus::Infeasible) {
    throw InfeasibleError("reward recovery infeasible: " + out.qp.message);
  }
  out.rewards = RewardVector(system.layout, num_states, num_actions, out.qp.r);
  out.min_residual = system.min_residual(out.qp.r);
  out.num_constraints = system.rows();
  return out;
}

RecoveryResult recover_state_rewards(const MarkovGame& game, const Bipolicy& observed, const Prior& prior,
                                     double gamma, const RecoveryOptions& options) {
  ConstraintSystem sys = state_reward_constraints(game, observed, gamma, options.execution);
  if (options.support_margin > 0.0) apply_support_margin(sys, observed, options.support_margin);
  return solve_recovery(sys, prior, game.num_states(), game.num_actions(), options);
}

RecoveryResult recover_joint_rewards(const MarkovGame& game, const Bipolicy& observed, const Prior& prior,
                                     double gamma, const RecoveryOptions& options) {
  ConstraintSystem sys = joint_reward_constraints(game, observed, gamma, options.execution);
  if (options.support_margin > 0.0) apply_support_margin(sys, observed, options.support_margin);
  return solve_recovery(sys, prior, game.num_states(), game.num_actions(), options);
}

RewardVector marginalize_rewards(const RewardVector& joint, const Matrix& pi2) {
  if (joint.layout() != RewardLayout::StateJointAction) throw ValidationError("marginalize_rewards needs joint rewards");
  const int n = joint.num_states();
  const int m = joint.num_actions();
  if (pi2.rows() != n || pi2.cols() != m) throw DimensionError("marginalize_rewards: policy shape mismatch");
  Vector out = Vector::Zero(static_cast<Eigen::Index>(n) * m);
  for (int a1 = 0; a1 < m; ++a1)
    for (int a2 = 0; a2 < m; ++a2)
      for (int s = 0; s < n; ++s)
        out(IndexScheme::state_action(s, a1, n)) += joint.values()(IndexScheme::joint(s, a1, a2, n, m)) * pi2(s, a2);
  return RewardVector(RewardLayout::StateAction, n, m, std::move(out));
}

}  // namespace zsirl
