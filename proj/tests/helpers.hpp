#pragma once

#include <random>
#include <string>

#include "oracles/oracles.hpp"
#include "zsirl/game.hpp"

namespace testing_util {

using namespace zsirl;

inline Bipolicy random_bipolicy(int n, int m, std::uint64_t seed) {
  return Bipolicy{oracle::random_policy(n, m, seed), oracle::random_policy(n, m, seed + 7919)};
}

inline std::vector<std::string> action_names(int m) {
  std::vector<std::string> names;
  for (int a = 0; a < m; ++a) names.push_back("a" + std::to_string(a));
  return names;
}

// Game with a dense random kernel and random joint rewards in [-1, 1].
inline MarkovGame random_game(int n, int m, double gamma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Triplet> t;
  for (int row = 0; row < n * m * m; ++row) {
    std::vector<double> p(static_cast<std::size_t>(n));
    double total = 0.0;
    for (auto& v : p) total += (v = u(rng) < 0.5 ? 0.0 : u(rng));
    if (total == 0.0) p[static_cast<std::size_t>(row % n)] = total = 1.0;
    for (int c = 0; c < n; ++c)
      if (p[static_cast<std::size_t>(c)] > 0.0) t.emplace_back(row, c, p[static_cast<std::size_t>(c)] / total);
  }
  SparseMatrix k(n * m * m, n);
  k.setFromTriplets(t.begin(), t.end());
  // Renormalise so rows sum to one to the last bit.
  for (int row = 0; row < k.rows(); ++row) {
    double total = 0.0;
    for (SparseMatrix::InnerIterator it(k, row); it; ++it) total += it.value();
    for (SparseMatrix::InnerIterator it(k, row); it; ++it) it.valueRef() /= total;
  }
  Vector r(n * m * m);
  for (auto& v : r) v = 2.0 * u(rng) - 1.0;
  return MarkovGame(n, action_names(m), std::move(k), RewardVector(RewardLayout::StateJointAction, n, m, r), gamma);
}

// One state that always returns to itself.
inline MarkovGame one_state_game(const Matrix& payoff, double gamma) {
  const int m = static_cast<int>(payoff.rows());
  std::vector<Triplet> t;
  for (int row = 0; row < m * m; ++row) t.emplace_back(row, 0, 1.0);
  SparseMatrix k(m * m, 1);
  k.setFromTriplets(t.begin(), t.end());
  Vector r(m * m);
  for (int a1 = 0; a1 < m; ++a1)
    for (int a2 = 0; a2 < m; ++a2) r(a1 * m + a2) = payoff(a1, a2);
  return MarkovGame(1, action_names(m), std::move(k), RewardVector(RewardLayout::StateJointAction, 1, m, r), gamma);
}

inline double max_abs(const Matrix& a) { return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff(); }

}  // namespace testing_util
