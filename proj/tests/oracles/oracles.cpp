#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>

namespace oracle {

namespace {

// Square reached from each square of the 2x2 board, per action.
//   1 2
//   3 4
constexpr int kMove[6][5] = {
    {0, 1, 2, 1, 2},  // N
    {0, 3, 4, 3, 4},  // S
    {0, 2, 2, 4, 4},  // E
    {0, 1, 1, 3, 3},  // W
    {0, 1, 2, 3, 4},  // stand
    {0, 1, 2, 3, 4},  // shoot
};

int small_index(int pa, int pb, int poss) { return ((pa - 1) * 4 + (pb - 1)) * 2 + poss; }

// Calls f on every k-subset of {0..n-1}.
void for_each_subset(int n, int k, const std::function<void(const std::vector<int>&)>& f) {
  std::vector<int> idx(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
  if (k > n) return;
  while (true) {
    f(idx);
    int i = k - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - k + i) --i;
    if (i < 0) return;
    ++idx[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < k; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
}

int sample(const double* cumulative, int count, double u) {
  for (int i = 0; i < count; ++i)
    if (u < cumulative[i]) return i;
  return count - 1;
}

}  // namespace

Matrix small_soccer_kernel(double beta, bool shoot) {
  const int n = 32;
  const int m = shoot ? 6 : 5;
  Matrix k = Matrix::Zero(n * m * m, n);
  for (int pa = 1; pa <= 4; ++pa) {
    for (int pb = 1; pb <= 4; ++pb) {
      for (int poss = 0; poss < 2; ++poss) {
        const int s = small_index(pa, pb, poss);
        const bool scoring = (poss == 0 && pa == 1) || (poss == 1 && pb == 4);
        for (int a1 = 0; a1 < m; ++a1) {
          for (int a2 = 0; a2 < m; ++a2) {
            const int row = (a1 * m + a2) * n + s;
            const bool shot = (poss == 0 && a1 == 5) || (poss == 1 && a2 == 5);
            if (scoring || shot) {
              k(row, small_index(2, 3, 0)) += 0.5;
              k(row, small_index(2, 3, 1)) += 0.5;
              continue;
            }
            const int na = kMove[a1][pa];
            const int nb = kMove[a2][pb];
            if (na == nb) {
              k(row, small_index(na, nb, 1 - poss)) += beta;
              k(row, small_index(na, nb, poss)) += 1.0 - beta;
            } else {
              k(row, small_index(na, nb, poss)) += 1.0;
            }
          }
        }
      }
    }
  }
  return k;
}

Matrix dense_kernel(const zsirl::MarkovGame& game) { return Matrix(game.kernel()); }

GameValue support_enumeration(const Matrix& payoff, double tol) {
  const int rows = static_cast<int>(payoff.rows());
  const int cols = static_cast<int>(payoff.cols());
  GameValue out;
  for (int k = 1; k <= std::min(rows, cols) && !out.found; ++k) {
    for_each_subset(rows, k, [&](const std::vector<int>& ri) {
      if (out.found) return;
      for_each_subset(cols, k, [&](const std::vector<int>& ci) {
        if (out.found) return;
        // Column mix y on ci makes every row in ri earn v; row mix x on ri
        // makes every column in ci cost v.
        Matrix sy = Matrix::Zero(k + 1, k + 1);
        Matrix sx = Matrix::Zero(k + 1, k + 1);
        for (int i = 0; i < k; ++i) {
          for (int j = 0; j < k; ++j) {
            sy(i, j) = payoff(ri[static_cast<std::size_t>(i)], ci[static_cast<std::size_t>(j)]);
            sx(j, i) = sy(i, j);
          }
          sy(i, k) = -1.0;
          sx(i, k) = -1.0;
          sy(k, i) = 1.0;
          sx(k, i) = 1.0;
        }
        Vector rhs = Vector::Zero(k + 1);
        rhs(k) = 1.0;
        const Vector zy = sy.completeOrthogonalDecomposition().solve(rhs);
        const Vector zx = sx.completeOrthogonalDecomposition().solve(rhs);
        if ((sy * zy - rhs).norm() > tol || (sx * zx - rhs).norm() > tol) return;
        Vector x = Vector::Zero(rows);
        Vector y = Vector::Zero(cols);
        for (int i = 0; i < k; ++i) {
          x(ri[static_cast<std::size_t>(i)]) = zx(i);
          y(ci[static_cast<std::size_t>(i)]) = zy(i);
        }
        if (x.minCoeff() < -tol || y.minCoeff() < -tol) return;
        const double v = zy(k);
        if (std::abs(zx(k) - v) > 1e3 * tol) return;
        if ((payoff * y).maxCoeff() > v + 1e3 * tol) return;
        if ((payoff.transpose() * x).minCoeff() < v - 1e3 * tol) return;
        out = GameValue{v, x, y, true};
      });
    });
  }
  return out;
}

LpVertex lp_vertex_enumeration(const Vector& c, const Matrix& a, const Vector& b, const std::vector<int>& sense,
                               double tol) {
  const int n = static_cast<int>(c.size());
  // Every constraint as g'x (<=) h, plus the equality rows.
  std::vector<Vector> ineq_g, eq_g;
  std::vector<double> ineq_h, eq_h;
  for (int i = 0; i < a.rows(); ++i) {
    const Vector row = a.row(i).transpose();
    if (sense[static_cast<std::size_t>(i)] == 0) {
      ineq_g.push_back(row);
      ineq_h.push_back(b(i));
    } else if (sense[static_cast<std::size_t>(i)] == 1) {
      ineq_g.push_back(-row);
      ineq_h.push_back(-b(i));
    } else {
      eq_g.push_back(row);
      eq_h.push_back(b(i));
    }
  }
  for (int j = 0; j < n; ++j) {
    Vector e = Vector::Zero(n);
    e(j) = -1.0;
    ineq_g.push_back(e);
    ineq_h.push_back(0.0);
  }
  const int need = n - static_cast<int>(eq_g.size());
  LpVertex best;
  if (need < 0) return best;
  for_each_subset(static_cast<int>(ineq_g.size()), need, [&](const std::vector<int>& tight) {
    Matrix sys(n, n);
    Vector rhs(n);
    int r = 0;
    for (std::size_t e = 0; e < eq_g.size(); ++e, ++r) {
      sys.row(r) = eq_g[e].transpose();
      rhs(r) = eq_h[e];
    }
    for (int t : tight) {
      sys.row(r) = ineq_g[static_cast<std::size_t>(t)].transpose();
      rhs(r) = ineq_h[static_cast<std::size_t>(t)];
      ++r;
    }
    Eigen::FullPivLU<Matrix> lu(sys);
    if (lu.rank() < n) return;
    const Vector x = lu.solve(rhs);
    for (std::size_t e = 0; e < eq_g.size(); ++e)
      if (std::abs(eq_g[e].dot(x) - eq_h[e]) > tol) return;
    for (std::size_t e = 0; e < ineq_g.size(); ++e)
      if (ineq_g[e].dot(x) > ineq_h[e] + tol) return;
    const double obj = c.dot(x);
    if (!best.feasible || obj > best.objective) best = LpVertex{true, obj, x};
  });
  return best;
}

QpVertex qp_active_set_enumeration(const Vector& mu, const Matrix& sigma, const Matrix& a, const Vector& h,
                                   double tol) {
  const int m = static_cast<int>(a.rows());
  QpVertex out;
  for (int k = 0; k <= std::min<int>(m, static_cast<int>(mu.size())) && !out.feasible; ++k) {
    for_each_subset(m, k, [&](const std::vector<int>& set) {
      if (out.feasible) return;
      Matrix as(k, a.cols());
      Vector hs(k);
      for (int i = 0; i < k; ++i) {
        as.row(i) = a.row(set[static_cast<std::size_t>(i)]);
        hs(i) = h(set[static_cast<std::size_t>(i)]);
      }
      Vector lambda = Vector::Zero(k);
      if (k > 0) {
        const Matrix gram = as * sigma * as.transpose();
        lambda = gram.completeOrthogonalDecomposition().solve(hs - as * mu);
      }
      const Vector r = mu + sigma * as.transpose() * lambda;
      if (k > 0 && ((as * r - hs).cwiseAbs().maxCoeff() > tol || lambda.minCoeff() < -tol)) return;
      if (m > 0 && (a * r - h).minCoeff() < -tol) return;
      const Vector d = r - mu;
      out = QpVertex{true, r, 0.5 * d.dot(sigma.ldlt().solve(d))};
    });
  }
  return out;
}

Matrix loop_G(const Matrix& kernel, int n, int m, const Matrix& pi1, const Matrix& pi2) {
  Matrix g = Matrix::Zero(n, n);
  for (int s = 0; s < n; ++s)
    for (int a1 = 0; a1 < m; ++a1)
      for (int a2 = 0; a2 < m; ++a2)
        for (int t = 0; t < n; ++t) g(s, t) += pi1(s, a1) * pi2(s, a2) * kernel((a1 * m + a2) * n + s, t);
  return g;
}

Matrix loop_B(int n, int m, const Matrix& pi1, const Matrix& pi2) {
  Matrix b = Matrix::Zero(n, n * m * m);
  for (int s = 0; s < n; ++s)
    for (int a1 = 0; a1 < m; ++a1)
      for (int a2 = 0; a2 < m; ++a2) b(s, (a1 * m + a2) * n + s) = pi1(s, a1) * pi2(s, a2);
  return b;
}

Matrix loop_C(const Matrix& pi1) {
  const int n = static_cast<int>(pi1.rows());
  const int m = static_cast<int>(pi1.cols());
  Matrix c = Matrix::Zero(n, n * m);
  for (int s = 0; s < n; ++s)
    for (int a = 0; a < m; ++a) c(s, a * n + s) = pi1(s, a);
  return c;
}

Matrix loop_F(const Matrix& kernel, int n, int m, const Matrix& pi1, const Matrix& pi2, int action, double gamma) {
  Matrix pinned = Matrix::Zero(n, m);
  pinned.col(action).setOnes();
  const Matrix g = loop_G(kernel, n, m, pi1, pi2);
  const Matrix gd = loop_G(kernel, n, m, pinned, pi2);
  const Matrix inv = (Matrix::Identity(n, n) - gamma * g).inverse();
  return (gamma * (g - gd) * inv + Matrix::Identity(n, n)) * loop_C(pi1);
}

Matrix loop_D(const Matrix& kernel, int n, int m, const Matrix& pi1, const Matrix& pi2, double gamma) {
  const Matrix g = loop_G(kernel, n, m, pi1, pi2);
  const Matrix inv = (Matrix::Identity(n, n) - gamma * g).inverse();
  return Matrix::Identity(n * m * m, n * m * m) + gamma * kernel * inv * loop_B(n, m, pi1, pi2);
}

Matrix loop_induced(const Matrix& kernel, int n, int m, const Matrix& pi2) {
  Matrix out = Matrix::Zero(n * m, n);
  for (int a1 = 0; a1 < m; ++a1)
    for (int s = 0; s < n; ++s)
      for (int a2 = 0; a2 < m; ++a2) out.row(a1 * n + s) += pi2(s, a2) * kernel.row((a1 * m + a2) * n + s);
  return out;
}

Matrix random_policy(int n, int m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix p(n, m);
  for (int s = 0; s < n; ++s) {
    for (int a = 0; a < m; ++a) p(s, a) = u(rng);
    p.row(s) /= p.row(s).sum();
  }
  return p;
}

McEstimate monte_carlo_value(const Matrix& kernel, const Vector& joint_rewards, int n, int m, const Matrix& pi1,
                             const Matrix& pi2, double gamma, int start, int rollouts, int horizon,
                             std::uint64_t seed) {
  auto cumulate = [](const Matrix& p) {
    Matrix c = p;
    for (int i = 0; i < c.rows(); ++i)
      for (int j = 1; j < c.cols(); ++j) c(i, j) += c(i, j - 1);
    return Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>(c);
  };
  const auto c1 = cumulate(pi1);
  const auto c2 = cumulate(pi2);
  const auto ck = cumulate(kernel);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int k = 0; k < rollouts; ++k) {
    int s = start;
    double discount = 1.0;
    double ret = 0.0;
    for (int t = 0; t < horizon; ++t) {
      const int a1 = sample(c1.row(s).data(), m, u(rng));
      const int a2 = sample(c2.row(s).data(), m, u(rng));
      const int row = (a1 * m + a2) * n + s;
      ret += discount * joint_rewards(row);
      discount *= gamma;
      s = sample(ck.row(row).data(), n, u(rng));
    }
    sum += ret;
    sum_sq += ret * ret;
  }
  const double mean = sum / rollouts;
  const double var = std::max(0.0, sum_sq / rollouts - mean * mean) * rollouts / (rollouts - 1.0);
  return McEstimate{mean, std::sqrt(var / rollouts)};
}

}  // namespace oracle
