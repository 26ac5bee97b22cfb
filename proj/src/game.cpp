#include "zsirl/game.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace zsirl {

namespace {

const std::vector<std::string> kSimpleActions{"N", "S", "E", "W", "stand"};
const std::vector<std::string> kShootActions{"N", "S", "E", "W", "stand", "shoot"};

void check_probability(double p, const char* field) {
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError(std::string(field) + " must lie in [0, 1]");
}

void check_discount(double gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ValidationError("gamma must lie in [0, 1)");
}

}  // namespace

bool GridSpec::is_goal_a(int square) const {
  return std::find(goal_squares_a.begin(), goal_squares_a.end(), square) != goal_squares_a.end();
}

bool GridSpec::is_goal_b(int square) const {
  return std::find(goal_squares_b.begin(), goal_squares_b.end(), square) != goal_squares_b.end();
}

int GridSpec::move(int square, int action) const {
  int r = row_of(square);
  int c = col_of(square);
  switch (action) {
    case kNorth: --r; break;
    case kSouth: ++r; break;
    case kEast: ++c; break;
    case kWest: --c; break;
    default: break;
  }
  if (r < 1 || r > rows || c < 1 || c > cols) return square;
  return square_at(r, c);
}

void GridSpec::validate() const {
  if (rows < 1) throw ValidationError("rows: must be positive");
  if (cols < 1) throw ValidationError("cols: must be positive");
  const int n = num_squares();
  auto in_range = [n](int q) { return q >= 1 && q <= n; };
  auto range_msg = [n](const char* field, int q) {
    return std::string(field) + ": square " + std::to_string(q) + " outside [1, " + std::to_string(n) + "]";
  };
  for (int q : goal_squares_a)
    if (!in_range(q)) throw ValidationError(range_msg("goal_squares_a", q));
  for (int q : goal_squares_b)
    if (!in_range(q)) throw ValidationError(range_msg("goal_squares_b", q));
  for (int q : goal_squares_a)
    if (is_goal_b(q)) {
      throw ValidationError("goal_squares_a: square " + std::to_string(q) + " is also a goal square of B");
    }
  if (!in_range(initial_pos_a)) throw ValidationError(range_msg("initial_pos_a", initial_pos_a));
  if (!in_range(initial_pos_b)) throw ValidationError(range_msg("initial_pos_b", initial_pos_b));
  if (is_goal_a(initial_pos_a)) throw ValidationError("initial_pos_a: A would score at reset");
  if (is_goal_b(initial_pos_b)) throw ValidationError("initial_pos_b: B would score at reset");
}

GridSpec GridSpec::paper() { return GridSpec{}; }

GridSpec GridSpec::small() {
  GridSpec g;
  g.rows = 2;
  g.cols = 2;
  g.goal_squares_a = {1};
  g.goal_squares_b = {4};
  g.initial_pos_a = 2;
  g.initial_pos_b = 3;
  return g;
}

void PssTable::validate(int num_squares, const char* field) const {
  if (static_cast<int>(values.size()) != num_squares) {
    throw ValidationError(std::string(field) + ": expected " + std::to_string(num_squares) + " entries, got " +
                          std::to_string(values.size()));
  }
  for (double p : values) check_probability(p, field);
}

PssTable PssTable::paper_a() {
  // Squares 1..20, row-major.
  return PssTable{{0.7, 0.5, 0.3, 0.1, 0.0,  //
                   1.0, 0.7, 0.5, 0.3, 0.1,  //
                   1.0, 0.7, 0.5, 0.3, 0.1,  //
                   0.7, 0.5, 0.3, 0.1, 0.0}};
}

PssTable PssTable::paper_b() {
  return PssTable{{0.0, 0.1, 0.3, 0.5, 0.7,  //
                   0.1, 0.3, 0.5, 0.7, 1.0,  //
                   0.1, 0.3, 0.5, 0.7, 1.0,  //
                   0.0, 0.1, 0.3, 0.5, 0.7}};
}

PssTable PssTable::small_a() { return PssTable{{1.0, 0.7, 0.3, 0.0}}; }

PssTable PssTable::small_b() { return rotated(small_a()); }

PssTable PssTable::rotated(const PssTable& table) {
  return PssTable{std::vector<double>(table.values.rbegin(), table.values.rend())};
}

std::string_view to_string(SoccerVariant v) { return v == SoccerVariant::Shoot ? "shoot" : "simple"; }

SoccerVariant parse_variant(std::string_view name) {
  if (name == "simple") return SoccerVariant::Simple;
  if (name == "shoot") return SoccerVariant::Shoot;
  throw ValidationError("variant: expected 'simple' or 'shoot', got '" + std::string(name) + "'");
}

SoccerSpec SoccerSpec::paper(SoccerVariant variant, double beta, double gamma) {
  return SoccerSpec{variant, GridSpec::paper(), beta, gamma, PssTable::paper_a(), PssTable::paper_b()};
}

SoccerSpec SoccerSpec::small(SoccerVariant variant, double beta, double gamma) {
  return SoccerSpec{variant, GridSpec::small(), beta, gamma, PssTable::small_a(), PssTable::small_b()};
}

int encode_state(const GridSpec& grid, int pos_a, int pos_b, Possession possession) {
  const int n = grid.num_squares();
  if (pos_a < 1 || pos_a > n || pos_b < 1 || pos_b > n) {
    throw DimensionError("encode_state: position outside [1, " + std::to_string(n) + "]");
  }
  return ((pos_a - 1) * n + (pos_b - 1)) * 2 + static_cast<int>(possession);
}

GameState decode_state(const GridSpec& grid, int index) {
  const int n = grid.num_squares();
  if (index < 0 || index >= grid.num_states()) {
    throw DimensionError("decode_state: index " + std::to_string(index) + " outside [0, " +
                         std::to_string(grid.num_states()) + ")");
  }
  GameState st;
  st.possession = static_cast<Possession>(index % 2);
  const int pair = index / 2;
  st.pos_a = pair / n + 1;
  st.pos_b = pair % n + 1;
  return st;
}

bool is_scoring_state(const GridSpec& grid, const GameState& state) {
  return state.possession == Possession::A ? grid.is_goal_a(state.pos_a) : grid.is_goal_b(state.pos_b);
}

MarkovGame::MarkovGame(int num_states, std::vector<std::string> action_names, SparseMatrix kernel,
                       RewardVector rewards, double gamma, std::optional<SoccerSpec> soccer)
    : num_states_(num_states),
      action_names_(std::move(action_names)),
      kernel_(std::move(kernel)),
      rewards_(std::move(rewards)),
      gamma_(gamma),
      soccer_(std::move(soccer)) {
  if (num_states_ <= 0) throw ValidationError("game needs at least one state");
  if (action_names_.empty()) throw ValidationError("game needs at least one action");
  check_discount(gamma_);
  const Eigen::Index m = num_actions();
  if (kernel_.rows() != num_states_ * m * m || kernel_.cols() != num_states_) {
    throw DimensionError("kernel must be (N*M*M) x N");
  }
  if (rewards_.num_states() != num_states_ || rewards_.num_actions() != m) {
    throw DimensionError("reward vector does not match the game's state/action counts");
  }
  kernel_.makeCompressed();
  for (Eigen::Index row = 0; row < kernel_.rows(); ++row) {
    double total = 0.0;
    for (SparseMatrix::InnerIterator it(kernel_, row); it; ++it) {
      if (!(it.value() >= 0.0)) throw ValidationError("kernel has a negative or non-finite entry");
      total += it.value();
    }
    if (std::abs(total - 1.0) > 1e-12) {
      throw ValidationError("kernel row " + std::to_string(row) + " sums to " + std::to_string(total));
    }
  }
}

MarkovGame MarkovGame::with_rewards(RewardVector rewards) const {
  MarkovGame copy = *this;
  if (rewards.num_states() != num_states_ || rewards.num_actions() != num_actions()) {
    throw DimensionError("with_rewards: reward vector does not match the game");
  }
  copy.rewards_ = std::move(rewards);
  return copy;
}

Vector transition_dist(const MarkovGame& game, int s, int a1, int a2) {
  const int m = game.num_actions();
  if (s < 0 || s >= game.num_states() || a1 < 0 || a1 >= m || a2 < 0 || a2 >= m) {
    throw DimensionError("transition_dist: index out of range");
  }
  Vector out = Vector::Zero(game.num_states());
  for (SparseMatrix::InnerIterator it(game.kernel(), game.kernel_row(s, a1, a2)); it; ++it) {
    out(it.col()) = it.value();
  }
  return out;
}

namespace {

MarkovGame build_soccer_impl(const SoccerSpec& spec) {
  const GridSpec& grid = spec.grid;
  grid.validate();
  check_probability(spec.beta, "beta");
  check_discount(spec.gamma);
  const bool shoot = spec.variant == SoccerVariant::Shoot;
  if (shoot) {
    spec.pss_a.validate(grid.num_squares(), "pss_a");
    spec.pss_b.validate(grid.num_squares(), "pss_b");
  }

  const int n = grid.num_states();
  const int m = spec.num_actions();
  const int reset_a = encode_state(grid, grid.initial_pos_a, grid.initial_pos_b, Possession::A);
  const int reset_b = encode_state(grid, grid.initial_pos_a, grid.initial_pos_b, Possession::B);

  std::vector<Triplet> entries;
  entries.reserve(static_cast<std::size_t>(n) * m * m * 2);
  const RewardLayout layout = shoot ? RewardLayout::StateJointAction : RewardLayout::StateOnly;
  Vector rewards = Vector::Zero(IndexScheme::length(layout, n, m));

  for (int s = 0; s < n; ++s) {
    const GameState st = decode_state(grid, s);
    const bool a_has_ball = st.possession == Possession::A;
    const bool scoring = is_scoring_state(grid, st);
    const double goal_value = scoring ? (a_has_ball ? 1.0 : -1.0) : 0.0;
    if (!shoot) rewards(s) = goal_value;

    for (int a1 = 0; a1 < m; ++a1) {
      for (int a2 = 0; a2 < m; ++a2) {
        const auto row = IndexScheme::joint(s, a1, a2, n, m);
        const bool a_shoots = shoot && a_has_ball && a1 == kShoot;
        const bool b_shoots = shoot && !a_has_ball && a2 == kShoot;

        if (shoot) {
          double r = goal_value;
          if (!scoring && a_shoots) r = spec.pss_a.at(st.pos_a);
          if (!scoring && b_shoots) r = -spec.pss_b.at(st.pos_b);
          rewards(row) = r;
        }

        if (scoring || a_shoots || b_shoots) {
          entries.emplace_back(row, reset_a, 0.5);
          entries.emplace_back(row, reset_b, 0.5);
          continue;
        }
        const int next_a = grid.move(st.pos_a, a1);
        const int next_b = grid.move(st.pos_b, a2);
        const int keep = encode_state(grid, next_a, next_b, st.possession);
        if (next_a == next_b) {
          const Possession flipped = a_has_ball ? Possession::B : Possession::A;
          const int flip = encode_state(grid, next_a, next_b, flipped);
          if (spec.beta > 0.0) entries.emplace_back(row, flip, spec.beta);
          if (spec.beta < 1.0) entries.emplace_back(row, keep, 1.0 - spec.beta);
        } else {
          entries.emplace_back(row, keep, 1.0);
        }
      }
    }
  }

  SparseMatrix kernel(static_cast<Eigen::Index>(n) * m * m, n);
  kernel.setFromTriplets(entries.begin(), entries.end());
  SoccerSpec stored = spec;
  if (!shoot) {
    stored.pss_a.values.clear();
    stored.pss_b.values.clear();
  }
  return MarkovGame(n, shoot ? kShootActions : kSimpleActions, std::move(kernel),
                    RewardVector(layout, n, m, std::move(rewards)), spec.gamma, std::move(stored));
}

}  // namespace

MarkovGame build_simple_soccer(const GridSpec& grid, double beta, double gamma) {
  return build_soccer_impl(SoccerSpec{SoccerVariant::Simple, grid, beta, gamma, {}, {}});
}

MarkovGame build_shoot_soccer(const GridSpec& grid, double beta, double gamma, const PssTable& pss_a,
                              const PssTable& pss_b) {
  return build_soccer_impl(SoccerSpec{SoccerVariant::Shoot, grid, beta, gamma, pss_a, pss_b});
}

MarkovGame build_soccer(const SoccerSpec& spec) { return build_soccer_impl(spec); }

}  // namespace zsirl
