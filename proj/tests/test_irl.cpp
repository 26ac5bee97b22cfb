#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "zsirl/equilibrium.hpp"
#include "zsirl/irl.hpp"
#include "zsirl/mirl.hpp"
#include "zsirl/operators.hpp"
#include "zsirl/prior.hpp"

using namespace zsirl;
using testing_util::max_abs;

namespace {

struct ShootFixture {
  SoccerSpec spec = SoccerSpec::small(SoccerVariant::Shoot);
  MarkovGame game = build_soccer(spec);
  Bipolicy observed = minimax_bipolicy(game, game.rewards(), spec.gamma).bipolicy;
  RewardVector truth_sa = marginalize_rewards(game.rewards(), observed.pi2);
};

const ShootFixture& fixture() {
  static const ShootFixture f;
  return f;
}

// Q(s, a) of a StateAction reward under the induced MDP.
Matrix q_values(const InducedMdp& mdp, const RewardVector& r, const Vector& v) {
  const int n = mdp.num_states, m = mdp.num_actions;
  Matrix q(n, m);
  const Vector next = mdp.kernel * v;
  for (int a = 0; a < m; ++a)
    for (int s = 0; s < n; ++s) q(s, a) = r.at(s, a, 0) + mdp.gamma * next(mdp.row(s, a));
  return q;
}

}  // namespace

TEST_SUITE("irl") {

TEST_CASE("induced MDP against the loop oracle") {
  const ShootFixture& f = fixture();
  const Matrix pi2 = oracle::random_policy(32, 6, 44);
  const InducedMdp mdp = induce_mdp(f.game, pi2, 0.9);
  CHECK(max_abs(Matrix(mdp.kernel) - oracle::loop_induced(oracle::dense_kernel(f.game), 32, 6, pi2)) <= 1e-14);
  CHECK(max_abs((Matrix(mdp.kernel).rowwise().sum()).array() - 1.0) <= 1e-9);
  // Rows of the induced kernel are the rows of the player-1 deviation matrices.
  const Bipolicy bp{f.observed.pi1, pi2};
  for (int i = 0; i < 6; ++i)
    CHECK(max_abs(Matrix(mdp.kernel).middleRows(i * 32, 32) - build_G_deviation(f.game, bp, Player::One, i)) <=
          1e-14);
  const InducedMdp pure = induce_mdp(f.game, pure_policy(32, 6, kWest), 0.9);
  const SparseMatrix& k = f.game.kernel();
  for (int a1 = 0; a1 < 6; ++a1)
    for (int s = 0; s < 32; ++s)
      CHECK((Matrix(pure.kernel.row(a1 * 32 + s)) - Matrix(k.row(f.game.kernel_row(s, a1, kWest)))).norm() == 0.0);
  const MarkovGame one = testing_util::one_state_game(Matrix::Zero(3, 3), 0.5);
  CHECK(Matrix(induce_mdp(one, oracle::random_policy(1, 3, 1), 0.5).kernel).isOnes());
}

TEST_CASE("constraint blocks are F minus the pinned selector") {
  const ShootFixture& f = fixture();
  const ConstraintSystem sys = irl_constraints(f.game, f.observed, f.spec.gamma);
  CHECK(sys.rows() == 6 * 32);
  CHECK(sys.layout == RewardLayout::StateAction);
  const Matrix a = sys.matrix->to_dense();
  for (int i = 0; i < 6; ++i) {
    const Matrix expect = build_F(f.game, f.observed, i, f.spec.gamma) - Matrix(build_C(pure_policy(32, 6, i)));
    CHECK(max_abs(a.middleRows(i * 32, 32) - expect) <= 1e-12);
  }
}

TEST_CASE("gamma zero compares immediate rewards") {
  const ShootFixture& f = fixture();
  const Bipolicy bp = testing_util::random_bipolicy(32, 6, 3);
  const Matrix a = irl_constraints(f.game, bp, 0.0).matrix->to_dense();
  const Matrix c = Matrix(build_C(bp.pi1));
  for (int i = 0; i < 6; ++i) CHECK(max_abs(a.middleRows(i * 32, 32) - (c - Matrix(build_C(pure_policy(32, 6, i))))) <= 1e-15);
}

TEST_CASE("transformed true rewards are feasible") {
  const ShootFixture& f = fixture();
  const ConstraintSystem sys = irl_constraints(f.game, f.observed, f.spec.gamma);
  CHECK(sys.min_residual(f.truth_sa.values()) >= -1e-6);
  const ConstraintSystem state = irl_constraints(f.game, f.observed, f.spec.gamma, RewardLayout::StateOnly);
  CHECK(state.rows() == 6 * 32);
  CHECK(state.matrix->cols() == 32);
}

TEST_CASE("feasible prior mean comes back unchanged") {
  const ShootFixture& f = fixture();
  const Prior p{f.truth_sa.values(), Covariance::identity(32 * 6)};
  const RecoveryResult r = recover_irl_rewards(f.game, f.observed, p, f.spec.gamma);
  CHECK(r.qp.status == QpStatus::Optimal);
  CHECK(max_abs(r.rewards.values() - f.truth_sa.values()) <= 1e-6);
}

TEST_CASE("recovered rewards make the observed policy optimal") {
  const ShootFixture& f = fixture();
  const Prior p = build_prior({MeanKind::Weak, CovKind::Strong}, f.game, RewardLayout::StateAction);
  const RecoveryResult r = recover_irl_rewards(f.game, f.observed, p, f.spec.gamma);
  REQUIRE(r.qp.status == QpStatus::Optimal);
  CHECK(r.rewards.size() == 32 * 6);
  const InducedMdp mdp = induce_mdp(f.game, f.observed.pi2, f.spec.gamma);
  const Vector v = evaluate_mdp_policy(mdp, r.rewards, f.observed.pi1);
  // One step of policy improvement gains nothing.
  const Matrix q = q_values(mdp, r.rewards, v);
  CHECK((q.rowwise().maxCoeff() - v).maxCoeff() <= 1e-6);
  const MdpSolution best = solve_mdp(mdp, r.rewards);
  CHECK(max_abs(best.values - v) <= 1e-6);
}

TEST_CASE("MDP value iteration and exact evaluation agree") {
  const ShootFixture& f = fixture();
  const InducedMdp mdp = induce_mdp(f.game, f.observed.pi2, f.spec.gamma);
  const MdpSolution sol = solve_mdp(mdp, f.truth_sa);
  CHECK(max_abs(evaluate_mdp_policy(mdp, f.truth_sa, sol.policy) - sol.values) <= 1e-8);
  // Player 1's equilibrium policy is optimal against the fixed opponent.
  CHECK(max_abs(evaluate_mdp_policy(mdp, f.truth_sa, f.observed.pi1) - sol.values) <= 1e-6);
}

TEST_CASE("PSS extraction") {
  const MarkovGame g = build_soccer(SoccerSpec::paper(SoccerVariant::Shoot));
  const PssEstimate a = extract_pss(g.rewards(), g);
  CHECK(a.estimate.size() == 20);
  CHECK(a.estimate[5] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(a.mean_abs_error <= 1e-12);
  const PssEstimate b = extract_pss(g.rewards(), g, Player::Two);
  CHECK(b.estimate[9] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(b.mean_abs_error <= 1e-12);

  std::mt19937_64 rng(8);
  const double delta = 0.05;
  std::uniform_real_distribution<double> u(-delta, delta);
  Vector noisy = g.rewards().values();
  for (auto& v : noisy) v += u(rng);
  const PssEstimate n = extract_pss(RewardVector(RewardLayout::StateJointAction, 800, 6, noisy), g);
  for (std::size_t q = 0; q < 20; ++q) CHECK(std::abs(n.estimate[q] - n.truth[q]) <= delta);

  const MarkovGame simple = build_soccer(SoccerSpec::small(SoccerVariant::Simple));
  CHECK_THROWS_AS(extract_pss(simple.rewards(), simple), ValidationError);
  const RewardVector sa = RewardVector::zeros(RewardLayout::StateAction, 800, 6);
  CHECK_THROWS(extract_pss(sa, g, Player::Two));
}

}
