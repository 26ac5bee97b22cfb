#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "zsirl/equilibrium.hpp"
#include "zsirl/game.hpp"
#include "zsirl/reward.hpp"

namespace zsirl {

// Random stream of one episode, derived from (master seed, episode index)
// alone so episodes can run in any order on any thread.
class EpisodeRng {
 public:
  EpisodeRng(std::uint64_t seed, std::uint64_t episode);

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  // Index drawn from a probability vector (entries past the mass go to the
  // last positive entry).
  int categorical(const Eigen::Ref<const Eigen::RowVectorXd>& probs);
  // Column drawn from one row of a row-major sparse matrix.
  int sparse_row(const SparseMatrix& m, Eigen::Index row);

 private:
  std::mt19937_64 engine_;
};

// Minimax bipolicy of the game with the given player-1 rewards (StateAction
// rewards are read as independent of a2). Callers use their own side.
Bipolicy policy_from_rewards(const MarkovGame& game, const RewardVector& rewards, const MinimaxOptions& options = {});

enum class Winner { A, B, Draw };

struct EpisodeOutcome {
  Winner winner = Winner::Draw;
  int steps = 0;
  int score_square = 0;  // 0 when nobody scored
};

// Plays one soccer episode: A follows policy_a (N x M), B follows policy_b.
// Starts from the reset distribution unless a start state is given. Entering
// a scoring state wins for the holder; a shot wins with the shooter's PSS and
// otherwise resets the board. Draw after max_steps.
EpisodeOutcome simulate_episode(const MarkovGame& game, const Matrix& policy_a, const Matrix& policy_b,
                                EpisodeRng& rng, int max_steps = 1000, std::optional<int> start_state = std::nullopt);

struct TournamentStats {
  int episodes = 0;
  int a_wins = 0;
  int b_wins = 0;
  int draws = 0;

  int decisive() const { return a_wins + b_wins; }
  // 100 * b_wins / decisive, NaN when nothing was decided.
  double b_win_pct() const;
};

TournamentStats play_matches(const MarkovGame& game, const Matrix& policy_a, const Matrix& policy_b, int episodes,
                             std::uint64_t seed, int max_steps = 1000, Execution execution = Execution::Parallel);

struct TournamentConfig {
  int episodes = 5000;
  std::vector<double> betas{0.0, 0.6, 1.0};
  std::uint64_t seed = 1;
  int max_steps = 1000;
  Execution execution = Execution::Parallel;
  MinimaxOptions minimax;
};

struct TournamentRow {
  double beta = 0.0;
  TournamentStats stats;
};

// For each beta: rebuild the game, let A play its own side of the minimax
// bipolicy of rewards_a and B its side of the one of rewards_b.
std::vector<TournamentRow> run_tournament(const SoccerSpec& base, const RewardVector& rewards_a,
                                          const RewardVector& rewards_b, const TournamentConfig& config);

// Discounted return of one trajectory of `horizon` steps under the bipolicy.
double discounted_return(const MarkovGame& game, const RewardVector& rewards, const Bipolicy& bipolicy,
                         int start_state, int horizon, EpisodeRng& rng);

struct ValueEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

// Monte Carlo estimate of V(start) with one stream per rollout.
ValueEstimate estimate_value(const MarkovGame& game, const RewardVector& rewards, const Bipolicy& bipolicy,
                             int start_state, int rollouts, int horizon, std::uint64_t seed,
                             Execution execution = Execution::Parallel);

}  // namespace zsirl
