#include "zsirl/irl.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "zsirl/operators.hpp"

namespace zsirl {

InducedMdp induce_mdp(const MarkovGame& game, const Matrix& pi2, double gamma) {
  const int n = game.num_states();
  const int m = game.num_actions();
  if (pi2.rows() != n || pi2.cols() != m) throw DimensionError("induce_mdp: policy shape mismatch");
  Bipolicy check{pi2, pi2};
  check.validate();
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ValidationError("gamma must lie in [0, 1)");

  std::vector<Triplet> entries;
  const SparseMatrix& kernel = game.kernel();
  for (int a1 = 0; a1 < m; ++a1) {
    for (int s = 0; s < n; ++s) {
      const Eigen::Index row = IndexScheme::state_action(s, a1, n);
      for (int a2 = 0; a2 < m; ++a2) {
        const double w = pi2(s, a2);
        if (w == 0.0) continue;
        for (SparseMatrix::InnerIterator it(kernel, game.kernel_row(s, a1, a2)); it; ++it)
          entries.emplace_back(row, it.col(), w * it.value());
      }
    }
  }
  InducedMdp mdp;
  mdp.num_states = n;
  mdp.num_actions = m;
  mdp.gamma = gamma;
  mdp.kernel.resize(static_cast<Eigen::Index>(n) * m, n);
  mdp.kernel.setFromTriplets(entries.begin(), entries.end());
  return mdp;
}

ConstraintSystem irl_constraints(const MarkovGame& game, const Bipolicy& observed, double gamma, RewardLayout layout,
                                 Execution execution) {
  observed.validate();
  if (observed.num_states() != game.num_states() || observed.num_actions() != game.num_actions()) {
    throw DimensionError("observed bipolicy does not match the game");
  }
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ValidationError("gamma must lie in [0, 1)");
  if (layout == RewardLayout::StateJointAction) throw ValidationError("single-agent recovery has no joint layout");
  const int n = game.num_states();
  const int m = game.num_actions();
  const Matrix g = build_G(game, observed);
  const Resolvent resolvent(g, gamma);
  const SparseMatrix c_pi = build_C(observed.pi1);
  const Eigen::Index width = layout == RewardLayout::StateAction ? static_cast<Eigen::Index>(n) * m : n;

  Matrix a(static_cast<Eigen::Index>(m) * n, width);
  bool failed = false;
  std::string message;
#pragma omp parallel for schedule(static, 1) if (execution == Execution::Parallel)
  for (int i = 0; i < m; ++i) {
    try {
      const Matrix diff = g - build_G_deviation(game, observed, Player::One, i);
      Matrix h = gamma * resolvent.right_solve(diff);
      auto block = a.middleRows(static_cast<Eigen::Index>(i) * n, n);
      if (layout == RewardLayout::StateOnly) {
        block = h;
      } else {
        h.diagonal().array() += 1.0;
        block = h * c_pi;
        block -= Matrix(build_C(pure_policy(n, m, i)));
      }
    } catch (const std::exception& e) {
#pragma omp critical
      {
        failed = true;
        message = e.what();
      }
    }
  }
  if (failed) throw SolverError(message);

  ConstraintSystem sys;
  sys.layout = layout;
  sys.sense.assign(static_cast<std::size_t>(m) * n, RowSense::GreaterEqual);
  for (int i = 0; i < m; ++i)
    for (int s = 0; s < n; ++s) sys.tags.push_back({Player::One, i, s});
  sys.matrix = std::make_shared<DenseConstraints>(std::move(a));
  return sys;
}

RecoveryResult recover_irl_rewards(const MarkovGame& game, const Bipolicy& observed, const Prior& prior,
                                   double gamma, RewardLayout layout, const RecoveryOptions& options) {
  ConstraintSystem sys = irl_constraints(game, observed, gamma, layout, options.execution);
  if (options.support_margin > 0.0) apply_support_margin(sys, observed, options.support_margin);
  return solve_recovery(sys, prior, game.num_states(), game.num_actions(), options);
}

namespace {

Vector action_rewards(const InducedMdp& mdp, const RewardVector& rewards) {
  const int n = mdp.num_states;
  const int m = mdp.num_actions;
  if (rewards.num_states() != n || rewards.num_actions() != m) throw DimensionError("mdp rewards do not match");
  if (rewards.layout() == RewardLayout::StateJointAction) throw ValidationError("mdp rewards cannot depend on a2");
  Vector r(static_cast<Eigen::Index>(n) * m);
  for (int a = 0; a < m; ++a)
    for (int s = 0; s < n; ++s) r(mdp.row(s, a)) = rewards.at(s, a, 0);
  return r;
}

}  // namespace

MdpSolution solve_mdp(const InducedMdp& mdp, const RewardVector& rewards, double tol, int max_iters) {
  const int n = mdp.num_states;
  const int m = mdp.num_actions;
  const Vector r = action_rewards(mdp, rewards);
  Vector v = Vector::Zero(n);
  MdpSolution out;
  for (int it = 1; it <= max_iters; ++it) {
    const Vector q = r + mdp.gamma * (mdp.kernel * v);
    Vector next(n);
    for (int s = 0; s < n; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < m; ++a) best = std::max(best, q(mdp.row(s, a)));
      next(s) = best;
    }
    const double change = (next - v).cwiseAbs().maxCoeff();
    v = next;
    if (change < tol) {
      out.iterations = it;
      break;
    }
    if (it == max_iters) throw SolverError("mdp value iteration did not converge");
  }
  const Vector q = r + mdp.gamma * (mdp.kernel * v);
  out.policy = Matrix::Zero(n, m);
  for (int s = 0; s < n; ++s) {
    int best = 0;
    for (int a = 1; a < m; ++a)
      if (q(mdp.row(s, a)) > q(mdp.row(s, best)) + 1e-12) best = a;
    out.policy(s, best) = 1.0;
  }
  out.values = evaluate_mdp_policy(mdp, rewards, out.policy);
  return out;
}

Vector evaluate_mdp_policy(const InducedMdp& mdp, const RewardVector& rewards, const Matrix& policy) {
  const int n = mdp.num_states;
  const int m = mdp.num_actions;
  if (policy.rows() != n || policy.cols() != m) throw DimensionError("mdp policy shape mismatch");
  const Vector r = action_rewards(mdp, rewards);
  Matrix g = Matrix::Zero(n, n);
  Vector rbar = Vector::Zero(n);
  for (int a = 0; a < m; ++a) {
    for (int s = 0; s < n; ++s) {
      const double w = policy(s, a);
      if (w == 0.0) continue;
      rbar(s) += w * r(mdp.row(s, a));
      for (SparseMatrix::InnerIterator it(mdp.kernel, mdp.row(s, a)); it; ++it) g(s, it.col()) += w * it.value();
    }
  }
  return Resolvent(g, mdp.gamma).solve(rbar);
}

PssEstimate extract_pss(const RewardVector& rewards, const MarkovGame& game, Player player) {
  if (!game.soccer()) throw ValidationError("extract_pss needs a soccer game");
  const SoccerSpec& spec = *game.soccer();
  if (game.num_actions() <= kShoot) throw ValidationError("extract_pss needs the shoot action");
  if (rewards.num_states() != game.num_states() || rewards.num_actions() != game.num_actions()) {
    throw DimensionError("extract_pss: rewards do not match the game");
  }
  if (player == Player::Two && rewards.layout() != RewardLayout::StateJointAction) {
    throw ValidationError("player 2 shot rewards are only visible in joint rewards");
  }
  const GridSpec& grid = spec.grid;
  const int squares = grid.num_squares();
  const int m = game.num_actions();
  std::vector<double> sum(static_cast<std::size_t>(squares), 0.0);
  std::vector<int> count(static_cast<std::size_t>(squares), 0);
  for (int s = 0; s < game.num_states(); ++s) {
    const GameState st = decode_state(grid, s);
    const bool a_holds = st.possession == Possession::A;
    if (a_holds != (player == Player::One)) continue;
    const auto q = static_cast<std::size_t>((a_holds ? st.pos_a : st.pos_b) - 1);
    for (int other = 0; other < m; ++other) {
      sum[q] += a_holds ? rewards.at(s, kShoot, other) : -rewards.at(s, other, kShoot);
      ++count[q];
    }
  }
  PssEstimate out;
  out.player = player;
  out.truth = (player == Player::One ? spec.pss_a : spec.pss_b).values;
  double err = 0.0;
  int used = 0;
  for (int q = 0; q < squares; ++q) {
    const auto k = static_cast<std::size_t>(q);
    out.estimate.push_back(count[k] ? sum[k] / count[k] : std::numeric_limits<double>::quiet_NaN());
    if (count[k]) {
      err += std::abs(out.estimate[k] - out.truth[k]);
      ++used;
    }
  }
  out.mean_abs_error = used ? err / used : 0.0;
  return out;
}

}  // namespace zsirl
