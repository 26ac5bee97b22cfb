#pragma once

#include <string_view>

#include "zsirl/covariance.hpp"
#include "zsirl/game.hpp"
#include "zsirl/reward.hpp"

namespace zsirl {

enum class MeanKind { Weak, Median, Strong };
enum class CovKind { Identity, Strong };

std::string_view to_string(MeanKind kind);
std::string_view to_string(CovKind kind);
MeanKind parse_mean_kind(std::string_view name);
CovKind parse_cov_kind(std::string_view name);

struct PriorSpec {
  MeanKind mean_kind = MeanKind::Weak;
  CovKind cov_kind = CovKind::Identity;
  // Weak mean: +-weak on every entry, by possession.
  double weak_magnitude = 0.8;
  // Median/strong mean: +-goal when the holder stands in a hypothesised goal.
  double goal_magnitude = 1.0;
  // Median/strong mean: value of every shoot entry while A holds the ball.
  double shoot_magnitude = 0.5;
  double variance = 1.0;
  // Ridge added to the class covariance.
  double ridge = 1e-6;
};

struct Prior {
  Vector mu;
  Covariance sigma;
};

// Gaussian prior over a soccer game's reward vector in the given layout.
//
// Median mean hypothesises A's goal anywhere in the leftmost column and B's
// anywhere in the rightmost; strong mean uses the game's actual goal squares.
// Strong covariance groups entries that must share one value: A's shoot
// entries by A's square, B's shoot entries by B's square, and the remaining
// entries of each state. Requires the shoot action.
Prior build_prior(const PriorSpec& spec, const MarkovGame& game, RewardLayout layout);

// Per-entry class labels of the strong covariance (exposed for tests).
std::vector<int> strong_covariance_classes(const MarkovGame& game, RewardLayout layout);

}  // namespace zsirl
