#include "zsirl/operators.hpp"

#include <cmath>
#include <string>

namespace zsirl {

namespace {

void check_policy_shape(const MarkovGame& game, const Bipolicy& bp) {
  if (bp.pi1.rows() != game.num_states() || bp.pi1.cols() != game.num_actions() ||
      bp.pi2.rows() != game.num_states() || bp.pi2.cols() != game.num_actions()) {
    throw DimensionError("bipolicy shape does not match the game (" + std::to_string(game.num_states()) + "x" +
                         std::to_string(game.num_actions()) + ")");
  }
}

void check_action(int action, int num_actions) {
  if (action < 0 || action >= num_actions) {
    throw DimensionError("action " + std::to_string(action) + " outside [0, " + std::to_string(num_actions) + ")");
  }
}

// Accumulates sum_{a1,a2} w1(a1) w2(a2) p(.|s,a1,a2) into row s of `out`.
template <typename W1, typename W2>
void accumulate_row(const MarkovGame& game, int s, const W1& w1, const W2& w2, Matrix& out) {
  const int m = game.num_actions();
  const SparseMatrix& kernel = game.kernel();
  for (int a1 = 0; a1 < m; ++a1) {
    const double p1 = w1(a1);
    if (p1 == 0.0) continue;
    for (int a2 = 0; a2 < m; ++a2) {
      const double weight = p1 * w2(a2);
      if (weight == 0.0) continue;
      for (SparseMatrix::InnerIterator it(kernel, game.kernel_row(s, a1, a2)); it; ++it) {
        out(s, it.col()) += weight * it.value();
      }
    }
  }
}

}  // namespace

Matrix build_G(const MarkovGame& game, const Bipolicy& bipolicy) {
  check_policy_shape(game, bipolicy);
  const int n = game.num_states();
  Matrix g = Matrix::Zero(n, n);
#pragma omp parallel for schedule(static)
  for (int s = 0; s < n; ++s) {
    accumulate_row(
        game, s, [&](int a) { return bipolicy.pi1(s, a); }, [&](int a) { return bipolicy.pi2(s, a); }, g);
  }
  return g;
}

Matrix build_G_deviation(const MarkovGame& game, const Bipolicy& bipolicy, Player deviator, int action) {
  check_policy_shape(game, bipolicy);
  check_action(action, game.num_actions());
  const int n = game.num_states();
  Matrix g = Matrix::Zero(n, n);
  auto pinned = [action](int a) { return a == action ? 1.0 : 0.0; };
#pragma omp parallel for schedule(static)
  for (int s = 0; s < n; ++s) {
    if (deviator == Player::One) {
      accumulate_row(game, s, pinned, [&](int a) { return bipolicy.pi2(s, a); }, g);
    } else {
      accumulate_row(game, s, [&](int a) { return bipolicy.pi1(s, a); }, pinned, g);
    }
  }
  return g;
}

namespace {

SparseMatrix averaging_operator(const Matrix& w1, const Matrix& w2) {
  const int n = static_cast<int>(w1.rows());
  const int m = static_cast<int>(w1.cols());
  std::vector<Triplet> entries;
  entries.reserve(static_cast<std::size_t>(n) * m * m);
  for (int a1 = 0; a1 < m; ++a1)
    for (int a2 = 0; a2 < m; ++a2)
      for (int s = 0; s < n; ++s) {
        const double weight = w1(s, a1) * w2(s, a2);
        if (weight != 0.0) entries.emplace_back(s, IndexScheme::joint(s, a1, a2, n, m), weight);
      }
  SparseMatrix b(n, static_cast<Eigen::Index>(n) * m * m);
  b.setFromTriplets(entries.begin(), entries.end());
  return b;
}

}  // namespace

SparseMatrix build_B(const Bipolicy& bipolicy) {
  bipolicy.validate();
  return averaging_operator(bipolicy.pi1, bipolicy.pi2);
}

SparseMatrix build_B_deviation(const Bipolicy& bipolicy, Player deviator, int action) {
  bipolicy.validate();
  check_action(action, bipolicy.num_actions());
  const Matrix pinned = pure_policy(bipolicy.num_states(), bipolicy.num_actions(), action);
  return deviator == Player::One ? averaging_operator(pinned, bipolicy.pi2)
                                 : averaging_operator(bipolicy.pi1, pinned);
}

SparseMatrix build_P(const MarkovGame& game) { return game.kernel(); }

SparseMatrix build_C(const Matrix& pi1) {
  const int n = static_cast<int>(pi1.rows());
  const int m = static_cast<int>(pi1.cols());
  std::vector<Triplet> entries;
  entries.reserve(static_cast<std::size_t>(n) * m);
  for (int s = 0; s < n; ++s)
    for (int a = 0; a < m; ++a)
      if (pi1(s, a) != 0.0) entries.emplace_back(s, IndexScheme::state_action(s, a, n), pi1(s, a));
  SparseMatrix c(n, static_cast<Eigen::Index>(n) * m);
  c.setFromTriplets(entries.begin(), entries.end());
  return c;
}

Resolvent::Resolvent(const Matrix& transition, double gamma) : gamma_(gamma) {
  if (transition.rows() != transition.cols()) throw DimensionError("resolvent needs a square matrix");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ValidationError("gamma must lie in [0, 1)");
  system_ = Matrix::Identity(transition.rows(), transition.cols()) - gamma * transition;
  lu_.compute(system_);
}

void Resolvent::check(const Matrix& solution, const Matrix& rhs, bool transposed) const {
  if (!solution.allFinite()) throw SolverError("(I - gamma G) solve produced non-finite values");
  const Matrix residual = transposed ? Matrix(solution * system_ - rhs) : Matrix(system_ * solution - rhs);
  const double scale = 1.0 + (rhs.size() ? rhs.cwiseAbs().maxCoeff() : 0.0);
  const double err = residual.size() ? residual.cwiseAbs().maxCoeff() : 0.0;
  if (err > 1e-10 * scale) {
    throw SolverError("(I - gamma G) solve residual " + std::to_string(err) + " exceeds 1e-10 (scaled by " +
                      std::to_string(scale) + ")");
  }
}

Matrix Resolvent::solve(const Matrix& rhs) const {
  if (rhs.rows() != system_.rows()) throw DimensionError("resolvent solve: row mismatch");
  Matrix x = lu_.solve(rhs);
  check(x, rhs, false);
  return x;
}

Vector Resolvent::solve(const Vector& rhs) const {
  if (rhs.size() != system_.rows()) throw DimensionError("resolvent solve: size mismatch");
  Vector x = lu_.solve(rhs);
  check(x, rhs, false);
  return x;
}

Matrix Resolvent::right_solve(const Matrix& lhs) const {
  if (lhs.cols() != system_.rows()) throw DimensionError("resolvent right_solve: column mismatch");
  Matrix xt = lu_.transpose().solve(lhs.transpose());
  Matrix x = xt.transpose();
  check(x, lhs, true);
  return x;
}

Matrix Resolvent::inverse() const { return solve(Matrix(Matrix::Identity(system_.rows(), system_.cols()))); }

DOperator::DOperator(const MarkovGame& game, const Bipolicy& bipolicy, double gamma)
    : p_(build_P(game)), b_(build_B(bipolicy)), resolvent_(build_G(game, bipolicy), gamma), gamma_(gamma) {}

Vector DOperator::apply(const Vector& r) const {
  if (r.size() != p_.rows()) throw DimensionError("D apply: reward length mismatch");
  const Vector v = resolvent_.solve(Vector(b_ * r));
  return r + gamma_ * (p_ * v);
}

Matrix DOperator::dense() const {
  if (p_.rows() > kMaxDense) {
    throw DimensionError("D is " + std::to_string(p_.rows()) + "^2; dense form is limited to " +
                         std::to_string(kMaxDense) + "^2");
  }
  const Matrix vb = resolvent_.solve(Matrix(b_));
  Matrix d = gamma_ * (p_ * vb);
  d.diagonal().array() += 1.0;
  return d;
}

Matrix build_D(const MarkovGame& game, const Bipolicy& bipolicy, double gamma) {
  return DOperator(game, bipolicy, gamma).dense();
}

Matrix build_F(const MarkovGame& game, const Bipolicy& bipolicy, int action, double gamma) {
  check_policy_shape(game, bipolicy);
  check_action(action, game.num_actions());
  const Matrix g = build_G(game, bipolicy);
  const Matrix g_dev = build_G_deviation(game, bipolicy, Player::One, action);
  const Resolvent resolvent(g, gamma);
  Matrix h = gamma * resolvent.right_solve(g - g_dev);
  h.diagonal().array() += 1.0;
  const SparseMatrix c = build_C(bipolicy.pi1);
  return h * c;
}

Vector expected_stage_reward(const RewardVector& rewards, const Bipolicy& bipolicy) {
  const int n = bipolicy.num_states();
  const int m = bipolicy.num_actions();
  if (rewards.num_states() != n || rewards.num_actions() != m) {
    throw DimensionError("expected_stage_reward: reward vector does not match bipolicy");
  }
  Vector out = Vector::Zero(n);
  for (int s = 0; s < n; ++s) {
    if (rewards.layout() == RewardLayout::StateOnly) {
      out(s) = rewards.values()(s);
      continue;
    }
    double total = 0.0;
    for (int a1 = 0; a1 < m; ++a1) {
      const double p1 = bipolicy.pi1(s, a1);
      if (p1 == 0.0) continue;
      for (int a2 = 0; a2 < m; ++a2) total += p1 * bipolicy.pi2(s, a2) * rewards.at(s, a1, a2);
    }
    out(s) = total;
  }
  return out;
}

}  // namespace zsirl
