#include "zsirl/reward.hpp"

#include <cmath>

namespace zsirl {

std::string_view to_string(RewardLayout layout) {
  switch (layout) {
    case RewardLayout::StateOnly: return "StateOnly";
    case RewardLayout::StateAction: return "StateAction";
    case RewardLayout::StateJointAction: return "StateJointAction";
  }
  return "?";
}

RewardLayout parse_layout(std::string_view name) {
  if (name == "StateOnly") return RewardLayout::StateOnly;
  if (name == "StateAction") return RewardLayout::StateAction;
  if (name == "StateJointAction") return RewardLayout::StateJointAction;
  throw ValidationError("unknown reward layout '" + std::string(name) + "'");
}

Eigen::Index IndexScheme::length(RewardLayout layout, int num_states, int num_actions) {
  const Eigen::Index n = num_states;
  const Eigen::Index m = num_actions;
  switch (layout) {
    case RewardLayout::StateOnly: return n;
    case RewardLayout::StateAction: return n * m;
    case RewardLayout::StateJointAction: return n * m * m;
  }
  return 0;
}

RewardVector::RewardVector(RewardLayout layout, int num_states, int num_actions, Vector values)
    : layout_(layout), num_states_(num_states), num_actions_(num_actions), values_(std::move(values)) {
  if (num_states <= 0 || num_actions <= 0) {
    throw ValidationError("reward vector needs positive state and action counts");
  }
  const auto expected = IndexScheme::length(layout, num_states, num_actions);
  if (values_.size() != expected) {
    throw DimensionError("reward vector of layout " + std::string(to_string(layout)) + " must have length " +
                         std::to_string(expected) + ", got " + std::to_string(values_.size()));
  }
  if (!values_.allFinite()) throw ValidationError("reward vector contains non-finite entries");
}

RewardVector RewardVector::zeros(RewardLayout layout, int num_states, int num_actions) {
  return RewardVector(layout, num_states, num_actions,
                      Vector::Zero(IndexScheme::length(layout, num_states, num_actions)));
}

double RewardVector::at(int s, int a1, int a2) const {
  switch (layout_) {
    case RewardLayout::StateOnly: return values_(s);
    case RewardLayout::StateAction: return values_(IndexScheme::state_action(s, a1, num_states_));
    case RewardLayout::StateJointAction:
      return values_(IndexScheme::joint(s, a1, a2, num_states_, num_actions_));
  }
  return 0.0;
}

RewardVector RewardVector::to_joint() const {
  if (layout_ == RewardLayout::StateJointAction) return *this;
  const int n = num_states_;
  const int m = num_actions_;
  Vector out(IndexScheme::length(RewardLayout::StateJointAction, n, m));
  for (int a1 = 0; a1 < m; ++a1)
    for (int a2 = 0; a2 < m; ++a2)
      for (int s = 0; s < n; ++s) out(IndexScheme::joint(s, a1, a2, n, m)) = at(s, a1, a2);
  return RewardVector(RewardLayout::StateJointAction, n, m, std::move(out));
}

void Bipolicy::validate(double tol) const {
  if (pi1.rows() != pi2.rows() || pi1.cols() != pi2.cols()) {
    throw DimensionError("bipolicy: player policies have different shapes");
  }
  if (pi1.rows() == 0 || pi1.cols() == 0) throw ValidationError("bipolicy is empty");
  for (const Matrix* pi : {&pi1, &pi2}) {
    const int player = pi == &pi1 ? 1 : 2;
    for (Eigen::Index s = 0; s < pi->rows(); ++s) {
      if (!pi->row(s).allFinite() || pi->row(s).minCoeff() < -tol ||
          std::abs(pi->row(s).sum() - 1.0) > tol) {
        throw ValidationError("bipolicy: row " + std::to_string(s) + " of player " + std::to_string(player) +
                              " is not a probability distribution");
      }
    }
  }
}

Bipolicy Bipolicy::uniform(int num_states, int num_actions) {
  const Matrix u = Matrix::Constant(num_states, num_actions, 1.0 / num_actions);
  return Bipolicy{u, u};
}

Matrix pure_policy(int num_states, int num_actions, int action) {
  Matrix pi = Matrix::Zero(num_states, num_actions);
  pi.col(action).setOnes();
  return pi;
}

}  // namespace zsirl
