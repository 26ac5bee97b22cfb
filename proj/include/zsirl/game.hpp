#pragma once

#include <compare>
#include <optional>
#include <string>
#include <vector>

#include "zsirl/reward.hpp"
#include "zsirl/types.hpp"

namespace zsirl {

enum class Possession : int { A = 0, B = 1 };

// Soccer actions in kernel order. Shoot exists only in the shoot variant.
enum Action : int { kNorth = 0, kSouth = 1, kEast = 2, kWest = 3, kStand = 4, kShoot = 5 };

// Rectangular board. Squares are numbered row-major from 1: square =
// (row - 1) * cols + col, rows top to bottom, columns left to right.
struct GridSpec {
  int rows = 4;
  int cols = 5;
  std::vector<int> goal_squares_a{6, 11};
  std::vector<int> goal_squares_b{10, 15};
  int initial_pos_a = 9;
  int initial_pos_b = 12;

  int num_squares() const { return rows * cols; }
  int num_states() const { return 2 * num_squares() * num_squares(); }
  bool is_goal_a(int square) const;
  bool is_goal_b(int square) const;
  int row_of(int square) const { return (square - 1) / cols + 1; }
  int col_of(int square) const { return (square - 1) % cols + 1; }
  int square_at(int row, int col) const { return (row - 1) * cols + col; }

  // Destination of a move; leaving the board means staying put. Shoot and
  // stand do not move.
  int move(int square, int action) const;

  // Square reached by rotating the board 180 degrees.
  int rotated(int square) const { return num_squares() + 1 - square; }

  // Throws ValidationError naming the offending field.
  void validate() const;

  // 4x5 board with goals {6, 11} for A and {10, 15} for B.
  static GridSpec paper();
  // 2x2 board for fast end-to-end runs: A scores on square 1, B on 4.
  static GridSpec small();

  bool operator==(const GridSpec&) const = default;
};

struct GameState {
  int pos_a = 1;
  int pos_b = 1;
  Possession possession = Possession::A;

  auto operator<=>(const GameState&) const = default;
};

// Probability of a successful shot per square (index square - 1).
struct PssTable {
  std::vector<double> values;

  double at(int square) const { return values.at(static_cast<std::size_t>(square - 1)); }
  void validate(int num_squares, const char* field) const;

  static PssTable paper_a();
  static PssTable paper_b();
  static PssTable small_a();
  static PssTable small_b();
  // Table for B obtained by rotating A's table through 180 degrees.
  static PssTable rotated(const PssTable& table);

  bool operator==(const PssTable&) const = default;
};

enum class SoccerVariant { Simple, Shoot };

std::string_view to_string(SoccerVariant v);
SoccerVariant parse_variant(std::string_view name);

// Everything needed to rebuild a soccer game.
struct SoccerSpec {
  SoccerVariant variant = SoccerVariant::Simple;
  GridSpec grid;
  double beta = 0.6;
  double gamma = 0.9;
  PssTable pss_a;
  PssTable pss_b;

  int num_actions() const { return variant == SoccerVariant::Shoot ? 6 : 5; }

  // Paper-scale (4x5) or small (2x2) spec with matching PSS tables.
  static SoccerSpec paper(SoccerVariant variant, double beta = 0.6, double gamma = 0.9);
  static SoccerSpec small(SoccerVariant variant, double beta = 0.6, double gamma = 0.9);

  bool operator==(const SoccerSpec&) const = default;
};

int encode_state(const GridSpec& grid, int pos_a, int pos_b, Possession possession);
GameState decode_state(const GridSpec& grid, int index);

// Two-player zero-sum Markov game with a sparse transition kernel.
//
// The kernel has N*M*M rows in StateJointAction order, row
// (a1*M + a2)*N + s holding p(.|s,a1,a2). Immutable after construction.
class MarkovGame {
 public:
  MarkovGame(int num_states, std::vector<std::string> action_names, SparseMatrix kernel, RewardVector rewards,
             double gamma, std::optional<SoccerSpec> soccer = std::nullopt);

  int num_states() const { return num_states_; }
  int num_actions() const { return static_cast<int>(action_names_.size()); }
  double gamma() const { return gamma_; }
  const std::vector<std::string>& action_names() const { return action_names_; }
  const SparseMatrix& kernel() const { return kernel_; }
  const RewardVector& rewards() const { return rewards_; }
  const std::optional<SoccerSpec>& soccer() const { return soccer_; }

  Eigen::Index kernel_row(int s, int a1, int a2) const {
    return IndexScheme::joint(s, a1, a2, num_states_, num_actions());
  }

  // Same dynamics and discount, different player-1 rewards.
  MarkovGame with_rewards(RewardVector rewards) const;

 private:
  int num_states_;
  std::vector<std::string> action_names_;
  SparseMatrix kernel_;
  RewardVector rewards_;
  double gamma_;
  std::optional<SoccerSpec> soccer_;
};

// Dense row of the kernel. Throws DimensionError on out-of-range indices.
Vector transition_dist(const MarkovGame& game, int s, int a1, int a2);

bool is_scoring_state(const GridSpec& grid, const GameState& state);

MarkovGame build_simple_soccer(const GridSpec& grid, double beta, double gamma);
MarkovGame build_shoot_soccer(const GridSpec& grid, double beta, double gamma, const PssTable& pss_a,
                              const PssTable& pss_b);
MarkovGame build_soccer(const SoccerSpec& spec);

}  // namespace zsirl
