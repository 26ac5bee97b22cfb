#include "zsirl/equilibrium.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "zsirl/lp.hpp"
#include "zsirl/operators.hpp"

namespace zsirl {

namespace {

Vector to_distribution(Vector v) {
  v = v.cwiseMax(0.0);
  const double total = v.sum();
  if (!(total > 0.0)) throw SolverError("matrix game: strategy has no positive mass");
  // Adding +0 turns -0 into 0.
  return (v / total).array() + 0.0;
}

}  // namespace

MatrixGameSolution solve_matrix_game(const Matrix& payoff, double tol) {
  if (payoff.rows() == 0 || payoff.cols() == 0) throw DimensionError("matrix game payoff is empty");
  if (!payoff.allFinite()) throw ValidationError("matrix game payoff has non-finite entries");

  const double shift = payoff.minCoeff() - 1.0;
  LinearProgram lp;
  lp.a = payoff.array() - shift;
  lp.b = Vector::Ones(payoff.rows());
  lp.objective = Vector::Ones(payoff.cols());
  lp.sense.assign(static_cast<std::size_t>(payoff.rows()), ConstraintSense::LessEqual);

  const LpSolution sol = solve_lp(lp, tol);
  if (sol.status != LpStatus::Optimal || !(sol.objective > 0.0)) {
    throw SolverError("matrix game LP ended with status " + std::string(to_string(sol.status)));
  }
  MatrixGameSolution out;
  out.strategy2 = to_distribution(sol.x);
  out.strategy1 = to_distribution(sol.duals);
  out.value = 1.0 / sol.objective + shift;
  return out;
}

Matrix stage_game(const MarkovGame& game, const RewardVector& rewards, const Vector& values, double gamma, int s) {
  const int m = game.num_actions();
  Matrix q(m, m);
  const SparseMatrix& kernel = game.kernel();
  for (int a1 = 0; a1 < m; ++a1) {
    for (int a2 = 0; a2 < m; ++a2) {
      double future = 0.0;
      for (SparseMatrix::InnerIterator it(kernel, game.kernel_row(s, a1, a2)); it; ++it) {
        future += it.value() * values(it.col());
      }
      q(a1, a2) = rewards.at(s, a1, a2) + gamma * future;
    }
  }
  return q;
}

namespace {

struct SweepBuffers {
  Vector next;
  Matrix pi1;
  Matrix pi2;
};

void solve_state(const MarkovGame& game, const RewardVector& rewards, const Vector& values, double gamma, int s,
                 SweepBuffers& out) {
  const MatrixGameSolution sol = solve_matrix_game(stage_game(game, rewards, values, gamma, s));
  out.next(s) = sol.value;
  out.pi1.row(s) = sol.strategy1.transpose();
  out.pi2.row(s) = sol.strategy2.transpose();
}

void sweep_serial(const MarkovGame& game, const RewardVector& rewards, const Vector& values, double gamma,
                  SweepBuffers& out) {
  for (int s = 0; s < game.num_states(); ++s) solve_state(game, rewards, values, gamma, s, out);
}

void sweep_parallel(const MarkovGame& game, const RewardVector& rewards, const Vector& values, double gamma,
                    SweepBuffers& out) {
  const int n = game.num_states();
  bool failed = false;
  std::string message;
#pragma omp parallel for schedule(dynamic, 16)
  for (int s = 0; s < n; ++s) {
    try {
      solve_state(game, rewards, values, gamma, s, out);
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

}  // namespace

MinimaxResult minimax_bipolicy(const MarkovGame& game, const RewardVector& rewards, double gamma,
                               const MinimaxOptions& options) {
  if (rewards.num_states() != game.num_states() || rewards.num_actions() != game.num_actions()) {
    throw DimensionError("minimax_bipolicy: reward vector does not match the game");
  }
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ValidationError("gamma must lie in [0, 1)");
  if (options.max_iters < 1) throw ValidationError("max_iters must be positive");

  const int n = game.num_states();
  const int m = game.num_actions();
  Vector values = Vector::Zero(n);
  SweepBuffers buf{Vector::Zero(n), Matrix::Zero(n, m), Matrix::Zero(n, m)};

  MinimaxResult result;
  double residual = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= options.max_iters; ++it) {
    if (options.execution == Execution::Parallel) {
      sweep_parallel(game, rewards, values, gamma, buf);
    } else {
      sweep_serial(game, rewards, values, gamma, buf);
    }
    residual = (buf.next - values).cwiseAbs().maxCoeff();
    result.residual_history.push_back(residual);
    values = buf.next;
    if (residual < options.tol) {
      result.bipolicy = Bipolicy{buf.pi1, buf.pi2};
      result.values = values;
      result.iterations = it;
      result.residual = residual;
      return result;
    }
  }
  throw SolverError("value iteration did not converge in " + std::to_string(options.max_iters) +
                    " sweeps; final residual " + std::to_string(residual));
}

Vector evaluate_bipolicy(const MarkovGame& game, const RewardVector& rewards, const Bipolicy& bipolicy,
                         double gamma) {
  bipolicy.validate();
  const Resolvent resolvent(build_G(game, bipolicy), gamma);
  return resolvent.solve(expected_stage_reward(rewards, bipolicy));
}

DeviationAudit audit_deviations(const MarkovGame& game, const RewardVector& rewards, const Bipolicy& bipolicy,
                                double gamma) {
  const Vector base = evaluate_bipolicy(game, rewards, bipolicy, gamma);
  DeviationAudit audit;
  audit.max_gain = -std::numeric_limits<double>::infinity();
  const int n = game.num_states();
  const int m = game.num_actions();
  for (Player player : {Player::One, Player::Two}) {
    for (int action = 0; action < m; ++action) {
      Bipolicy deviated = bipolicy;
      (player == Player::One ? deviated.pi1 : deviated.pi2) = pure_policy(n, m, action);
      const Vector v = evaluate_bipolicy(game, rewards, deviated, gamma);
      const Vector gain = player == Player::One ? Vector(v - base) : Vector(base - v);
      Eigen::Index worst = 0;
      const double g = gain.maxCoeff(&worst);
      if (g > audit.max_gain) {
        audit = DeviationAudit{g, player, action, static_cast<int>(worst)};
      }
    }
  }
  return audit;
}

}  // namespace zsirl
