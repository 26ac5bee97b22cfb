#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "zsirl/types.hpp"

namespace zsirl {

// Reward vectors come in three flat layouts. All of them are action-major,
// state-minor, so a block of N consecutive entries shares its action indices.
//   StateOnly:        index = s                        length N
//   StateAction:      index = a1*N + s                 length M*N
//   StateJointAction: index = (a1*M + a2)*N + s        length M*M*N
// States and actions are 0-based here; squares are the only 1-based indices
// in the library.
enum class RewardLayout { StateOnly, StateAction, StateJointAction };

std::string_view to_string(RewardLayout layout);
RewardLayout parse_layout(std::string_view name);

struct IndexScheme {
  static constexpr Eigen::Index state_action(int s, int a1, int num_states) {
    return static_cast<Eigen::Index>(a1) * num_states + s;
  }
  static constexpr Eigen::Index joint(int s, int a1, int a2, int num_states, int num_actions) {
    return (static_cast<Eigen::Index>(a1) * num_actions + a2) * num_states + s;
  }
  static Eigen::Index length(RewardLayout layout, int num_states, int num_actions);
};

// Player 1's reward. Player 2 receives the negation.
class RewardVector {
 public:
  RewardVector() = default;
  RewardVector(RewardLayout layout, int num_states, int num_actions, Vector values);

  static RewardVector zeros(RewardLayout layout, int num_states, int num_actions);

  RewardLayout layout() const { return layout_; }
  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }
  const Vector& values() const { return values_; }
  Vector& values() { return values_; }
  Eigen::Index size() const { return values_.size(); }

  // r(s, a1, a2) regardless of layout; coarser layouts broadcast.
  double at(int s, int a1, int a2) const;

  // Broadcast into the StateJointAction layout (r(s,a1) is taken as
  // independent of a2, r(s) as independent of both actions).
  RewardVector to_joint() const;

 private:
  RewardLayout layout_ = RewardLayout::StateOnly;
  int num_states_ = 0;
  int num_actions_ = 0;
  Vector values_;
};

// Per-state mixed strategies for both players, stored as N x M row-stochastic
// matrices.
struct Bipolicy {
  Matrix pi1;
  Matrix pi2;

  int num_states() const { return static_cast<int>(pi1.rows()); }
  int num_actions() const { return static_cast<int>(pi1.cols()); }
  const Matrix& of(Player p) const { return p == Player::One ? pi1 : pi2; }

  // Throws ValidationError unless both matrices have the same shape and
  // every row is a distribution within tol.
  void validate(double tol = 1e-9) const;

  static Bipolicy uniform(int num_states, int num_actions);
};

// Matrix with every row equal to the unit vector of `action`.
Matrix pure_policy(int num_states, int num_actions, int action);

}  // namespace zsirl
