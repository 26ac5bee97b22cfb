#include "zsirl/prior.hpp"

#include <map>
#include <string>
#include <tuple>

namespace zsirl {

std::string_view to_string(MeanKind kind) {
  switch (kind) {
    case MeanKind::Weak: return "weak";
    case MeanKind::Median: return "median";
    case MeanKind::Strong: return "strong";
  }
  return "?";
}

std::string_view to_string(CovKind kind) {
  switch (kind) {
    case CovKind::Identity: return "identity";
    case CovKind::Strong: return "strong";
  }
  return "?";
}

MeanKind parse_mean_kind(std::string_view name) {
  if (name == "weak") return MeanKind::Weak;
  if (name == "median") return MeanKind::Median;
  if (name == "strong") return MeanKind::Strong;
  throw ValidationError("unknown mean kind '" + std::string(name) + "' (weak, median, strong)");
}

CovKind parse_cov_kind(std::string_view name) {
  if (name == "identity") return CovKind::Identity;
  if (name == "strong") return CovKind::Strong;
  throw ValidationError("unknown covariance kind '" + std::string(name) + "' (identity, strong)");
}

namespace {

const SoccerSpec& soccer_of(const MarkovGame& game) {
  if (!game.soccer()) throw ValidationError("priors are defined for soccer games only");
  return *game.soccer();
}

bool has_shoot(const MarkovGame& game) { return game.num_actions() > kShoot; }

double state_mean(const PriorSpec& spec, const GridSpec& grid, const GameState& st) {
  if (spec.mean_kind == MeanKind::Weak) {
    return st.possession == Possession::A ? spec.weak_magnitude : -spec.weak_magnitude;
  }
  if (st.possession == Possession::A) {
    const bool goal = spec.mean_kind == MeanKind::Median ? grid.col_of(st.pos_a) == 1 : grid.is_goal_a(st.pos_a);
    return goal ? spec.goal_magnitude : 0.0;
  }
  const bool goal = spec.mean_kind == MeanKind::Median ? grid.col_of(st.pos_b) == grid.cols : grid.is_goal_b(st.pos_b);
  return goal ? -spec.goal_magnitude : 0.0;
}

double entry_mean(const PriorSpec& spec, const GridSpec& grid, const GameState& st, bool a_shoots) {
  if (spec.mean_kind != MeanKind::Weak && a_shoots && st.possession == Possession::A) return spec.shoot_magnitude;
  return state_mean(spec, grid, st);
}

}  // namespace

std::vector<int> strong_covariance_classes(const MarkovGame& game, RewardLayout layout) {
  const GridSpec& grid = soccer_of(game).grid;
  if (!has_shoot(game)) throw ValidationError("strong covariance needs the shoot action");
  if (layout == RewardLayout::StateOnly) throw ValidationError("strong covariance needs action-dependent rewards");
  const int n = game.num_states();
  const int m = game.num_actions();

  // Labels are handed out in order of first appearance, so they are stable.
  std::map<std::tuple<int, int>, int> ids;
  auto id = [&ids](int kind, int key) {
    auto [it, inserted] = ids.try_emplace({kind, key}, static_cast<int>(ids.size()));
    return it->second;
  };
  enum { kState = 0, kShootA = 1, kShootB = 2 };

  std::vector<int> classes(static_cast<std::size_t>(IndexScheme::length(layout, n, m)));
  for (int s = 0; s < n; ++s) {
    const GameState st = decode_state(grid, s);
    const bool a_holds = st.possession == Possession::A;
    if (layout == RewardLayout::StateAction) {
      for (int a1 = 0; a1 < m; ++a1) {
        const int c = (a_holds && a1 == kShoot) ? id(kShootA, st.pos_a) : id(kState, s);
        classes[static_cast<std::size_t>(IndexScheme::state_action(s, a1, n))] = c;
      }
      continue;
    }
    for (int a1 = 0; a1 < m; ++a1) {
      for (int a2 = 0; a2 < m; ++a2) {
        int c;
        if (a_holds && a1 == kShoot) {
          c = id(kShootA, st.pos_a);
        } else if (!a_holds && a2 == kShoot) {
          c = id(kShootB, st.pos_b);
        } else {
          c = id(kState, s);
        }
        classes[static_cast<std::size_t>(IndexScheme::joint(s, a1, a2, n, m))] = c;
      }
    }
  }
  return classes;
}

Prior build_prior(const PriorSpec& spec, const MarkovGame& game, RewardLayout layout) {
  const GridSpec& grid = soccer_of(game).grid;
  const int n = game.num_states();
  const int m = game.num_actions();
  const bool shoot = has_shoot(game);

  Vector mu(IndexScheme::length(layout, n, m));
  for (int s = 0; s < n; ++s) {
    const GameState st = decode_state(grid, s);
    switch (layout) {
      case RewardLayout::StateOnly: mu(s) = state_mean(spec, grid, st); break;
      case RewardLayout::StateAction:
        for (int a1 = 0; a1 < m; ++a1)
          mu(IndexScheme::state_action(s, a1, n)) = entry_mean(spec, grid, st, shoot && a1 == kShoot);
        break;
      case RewardLayout::StateJointAction:
        for (int a1 = 0; a1 < m; ++a1)
          for (int a2 = 0; a2 < m; ++a2)
            mu(IndexScheme::joint(s, a1, a2, n, m)) = entry_mean(spec, grid, st, shoot && a1 == kShoot);
        break;
    }
  }

  Covariance sigma = spec.cov_kind == CovKind::Identity
                         ? Covariance::identity(mu.size(), spec.variance)
                         : Covariance::class_block(strong_covariance_classes(game, layout), spec.variance, spec.ridge);
  return Prior{std::move(mu), std::move(sigma)};
}

}  // namespace zsirl
