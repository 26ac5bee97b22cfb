#include "zsirl/montecarlo.hpp"

#include <cmath>
#include <limits>

namespace zsirl {

EpisodeRng::EpisodeRng(std::uint64_t seed, std::uint64_t episode) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(episode), static_cast<std::uint32_t>(episode >> 32)};
  engine_.seed(seq);
}

int EpisodeRng::categorical(const Eigen::Ref<const Eigen::RowVectorXd>& probs) {
  const double u = uniform();
  double acc = 0.0;
  int last = -1;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    if (probs(i) <= 0.0) continue;
    acc += probs(i);
    last = static_cast<int>(i);
    if (u < acc) return last;
  }
  if (last < 0) throw ValidationError("categorical draw from a vector without mass");
  return last;
}

int EpisodeRng::sparse_row(const SparseMatrix& m, Eigen::Index row) {
  const double u = uniform();
  double acc = 0.0;
  int last = -1;
  for (SparseMatrix::InnerIterator it(m, row); it; ++it) {
    if (it.value() <= 0.0) continue;
    acc += it.value();
    last = static_cast<int>(it.col());
    if (u < acc) return last;
  }
  if (last < 0) throw ValidationError("transition row without mass");
  return last;
}

Bipolicy policy_from_rewards(const MarkovGame& game, const RewardVector& rewards, const MinimaxOptions& options) {
  return minimax_bipolicy(game, rewards, game.gamma(), options).bipolicy;
}

namespace {

const SoccerSpec& soccer_of(const MarkovGame& game) {
  if (!game.soccer()) throw ValidationError("simulation needs a soccer game");
  return *game.soccer();
}

int reset_state(const GridSpec& grid, EpisodeRng& rng) {
  const Possession p = rng.uniform() < 0.5 ? Possession::A : Possession::B;
  return encode_state(grid, grid.initial_pos_a, grid.initial_pos_b, p);
}

}  // namespace

EpisodeOutcome simulate_episode(const MarkovGame& game, const Matrix& policy_a, const Matrix& policy_b,
                                EpisodeRng& rng, int max_steps, std::optional<int> start_state) {
  const SoccerSpec& spec = soccer_of(game);
  const GridSpec& grid = spec.grid;
  const bool shoot = spec.variant == SoccerVariant::Shoot;
  int s = start_state ? *start_state : reset_state(grid, rng);
  if (s < 0 || s >= game.num_states()) throw DimensionError("simulate_episode: start state out of range");

  EpisodeOutcome out;
  for (int step = 0; step < max_steps; ++step) {
    const GameState st = decode_state(grid, s);
    const int a1 = rng.categorical(policy_a.row(s));
    const int a2 = rng.categorical(policy_b.row(s));
    const bool a_holds = st.possession == Possession::A;
    const int holder_action = a_holds ? a1 : a2;
    if (shoot && holder_action == kShoot && !is_scoring_state(grid, st)) {
      const int square = a_holds ? st.pos_a : st.pos_b;
      const double pss = (a_holds ? spec.pss_a : spec.pss_b).at(square);
      if (rng.uniform() < pss) {
        out.winner = a_holds ? Winner::A : Winner::B;
        out.steps = step + 1;
        out.score_square = square;
        return out;
      }
      s = reset_state(grid, rng);
      continue;
    }
    s = rng.sparse_row(game.kernel(), game.kernel_row(s, a1, a2));
    const GameState next = decode_state(grid, s);
    if (is_scoring_state(grid, next)) {
      const bool a_scored = next.possession == Possession::A;
      out.winner = a_scored ? Winner::A : Winner::B;
      out.steps = step + 1;
      out.score_square = a_scored ? next.pos_a : next.pos_b;
      return out;
    }
  }
  out.steps = max_steps;
  return out;
}

double TournamentStats::b_win_pct() const {
  return decisive() > 0 ? 100.0 * b_wins / decisive() : std::numeric_limits<double>::quiet_NaN();
}

TournamentStats play_matches(const MarkovGame& game, const Matrix& policy_a, const Matrix& policy_b, int episodes,
                             std::uint64_t seed, int max_steps, Execution execution) {
  if (episodes < 1) throw ValidationError("episodes must be at least 1");
  if (max_steps < 0) throw ValidationError("max_steps must be non-negative");
  Bipolicy{policy_a, policy_b}.validate();
  if (policy_a.rows() != game.num_states() || policy_a.cols() != game.num_actions()) {
    throw DimensionError("play_matches: policy shape does not match the game");
  }
  soccer_of(game);

  int a_wins = 0;
  int b_wins = 0;
  int draws = 0;
#pragma omp parallel for schedule(dynamic, 64) reduction(+ : a_wins, b_wins, draws) if (execution == Execution::Parallel)
  for (int e = 0; e < episodes; ++e) {
    EpisodeRng rng(seed, static_cast<std::uint64_t>(e));
    switch (simulate_episode(game, policy_a, policy_b, rng, max_steps).winner) {
      case Winner::A: ++a_wins; break;
      case Winner::B: ++b_wins; break;
      case Winner::Draw: ++draws; break;
    }
  }
  return TournamentStats{episodes, a_wins, b_wins, draws};
}

std::vector<TournamentRow> run_tournament(const SoccerSpec& base, const RewardVector& rewards_a,
                                          const RewardVector& rewards_b, const TournamentConfig& config) {
  if (config.episodes < 1) throw ValidationError("episodes must be at least 1");
  if (config.betas.empty()) throw ValidationError("at least one beta is required");
  std::vector<TournamentRow> rows;
  for (double beta : config.betas) {
    SoccerSpec spec = base;
    spec.beta = beta;
    const MarkovGame game = build_soccer(spec);
    const Matrix pa = policy_from_rewards(game, rewards_a, config.minimax).pi1;
    const Matrix pb = policy_from_rewards(game, rewards_b, config.minimax).pi2;
    rows.push_back({beta, play_matches(game, pa, pb, config.episodes, config.seed, config.max_steps, config.execution)});
  }
  return rows;
}

double discounted_return(const MarkovGame& game, const RewardVector& rewards, const Bipolicy& bipolicy,
                         int start_state, int horizon, EpisodeRng& rng) {
  int s = start_state;
  double total = 0.0;
  double discount = 1.0;
  for (int t = 0; t < horizon; ++t) {
    const int a1 = rng.categorical(bipolicy.pi1.row(s));
    const int a2 = rng.categorical(bipolicy.pi2.row(s));
    total += discount * rewards.at(s, a1, a2);
    discount *= game.gamma();
    s = rng.sparse_row(game.kernel(), game.kernel_row(s, a1, a2));
  }
  return total;
}

ValueEstimate estimate_value(const MarkovGame& game, const RewardVector& rewards, const Bipolicy& bipolicy,
                             int start_state, int rollouts, int horizon, std::uint64_t seed, Execution execution) {
  if (rollouts < 2) throw ValidationError("estimate_value needs at least two rollouts");
  if (start_state < 0 || start_state >= game.num_states()) throw DimensionError("start state out of range");
  bipolicy.validate();
  Vector samples(rollouts);
#pragma omp parallel for schedule(static) if (execution == Execution::Parallel)
  for (int e = 0; e < rollouts; ++e) {
    EpisodeRng rng(seed, static_cast<std::uint64_t>(e));
    samples(e) = discounted_return(game, rewards, bipolicy, start_state, horizon, rng);
  }
  ValueEstimate out;
  out.mean = samples.mean();
  const double var = (samples.array() - out.mean).square().sum() / (rollouts - 1);
  out.std_error = std::sqrt(var / rollouts);
  return out;
}

}  // namespace zsirl
