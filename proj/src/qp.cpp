#include "zsirl/qp.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>

#include "zsirl/lp.hpp"

namespace zsirl {

std::string_view to_string(QpStatus status) {
  switch (status) {
    case QpStatus::Optimal: return "Optimal";
    case QpStatus::MaxIter: return "MaxIter";
    case QpStatus::Infeasible: return "Infeasible";
  }
  return "?";
}

std::string_view to_string(QpRoute route) {
  switch (route) {
    case QpRoute::Auto: return "auto";
    case QpRoute::Primal: return "primal";
    case QpRoute::Gram: return "gram";
  }
  return "?";
}

namespace {

void symmetrize(Matrix& q) {
  const Eigen::Index m = q.rows();
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index i = j + 1; i < m; ++i) {
      const double v = 0.5 * (q(i, j) + q(j, i));
      q(i, j) = v;
      q(j, i) = v;
    }
  }
}

Matrix dense_gram(const Matrix& a, const Covariance& sigma) {
  Matrix q;
  if (sigma.kind() == Covariance::Kind::ScaledIdentity) {
    q = Matrix::Zero(a.rows(), a.rows());
    q.selfadjointView<Eigen::Lower>().rankUpdate(a, sigma.variance());
    q.triangularView<Eigen::StrictlyUpper>() = q.transpose();
    return q;
  }
  q.noalias() = a * sigma.apply(Matrix(a.transpose()));
  symmetrize(q);
  return q;
}

}  // namespace

Matrix ConstraintMatrix::gram(const Covariance& sigma) const { return dense_gram(to_dense(), sigma); }

Vector ConstraintMatrix::row_max_abs() const {
  Vector out(rows());
  constexpr Eigen::Index kBlock = 256;
  for (Eigen::Index start = 0; start < rows(); start += kBlock) {
    const Eigen::Index count = std::min(kBlock, rows() - start);
    out.segment(start, count) = row_block(start, count).cwiseAbs().rowwise().maxCoeff();
  }
  return out;
}

Matrix DenseConstraints::gram(const Covariance& sigma) const { return dense_gram(a_, sigma); }

SparsePlusProductConstraints::SparsePlusProductConstraints(SparseMatrix s, Matrix w, SparseMatrix b)
    : s_(std::move(s)), w_(std::move(w)), b_(std::move(b)) {
  if (w_.rows() != s_.rows() || w_.cols() != b_.rows() || b_.cols() != s_.cols()) {
    throw DimensionError("sparse-plus-product constraints: inconsistent block shapes");
  }
}

Vector SparsePlusProductConstraints::multiply(const Vector& x) const {
  Vector bx = b_ * x;
  Vector out = s_ * x;
  out.noalias() += w_ * bx;
  return out;
}

Vector SparsePlusProductConstraints::multiply_transpose(const Vector& y) const {
  Vector wy = w_.transpose() * y;
  Vector out = s_.transpose() * y;
  out.noalias() += b_.transpose() * wy;
  return out;
}

Matrix SparsePlusProductConstraints::to_dense() const {
  Matrix out = Matrix(s_);
  out.noalias() += w_ * Matrix(b_);
  return out;
}

Matrix SparsePlusProductConstraints::row_block(Eigen::Index start, Eigen::Index count) const {
  Matrix out = Matrix(SparseMatrix(s_.middleRows(start, count)));
  out.noalias() += w_.middleRows(start, count) * Matrix(b_);
  return out;
}

Matrix SparsePlusProductConstraints::apply_right(const SparseMatrix& u) const {
  Matrix out = Matrix(SparseMatrix(s_ * u));
  out.noalias() += w_ * Matrix(SparseMatrix(b_ * u));
  return out;
}

Matrix SparsePlusProductConstraints::gram(const Covariance& sigma) const {
  if (sigma.kind() == Covariance::Kind::Dense) return dense_gram(to_dense(), sigma);

  // A A' = S S' + X W' + W X' + W K W' with X = S B', K = B B'.
  const double ridge = sigma.kind() == Covariance::Kind::ScaledIdentity ? sigma.variance() : sigma.ridge();
  const Eigen::Index m = rows();
  Matrix q = Matrix::Zero(m, m);
  if (ridge > 0.0) {
    const SparseMatrix bt = b_.transpose();
    Matrix y = Matrix(SparseMatrix(s_ * bt));
    const Matrix k = Matrix(SparseMatrix(b_ * bt));
    y.noalias() += 0.5 * w_ * k;
    q.noalias() = y * w_.transpose();
    for (Eigen::Index j = 0; j < m; ++j) {
      for (Eigen::Index i = j; i < m; ++i) {
        const double v = q(i, j) + q(j, i);
        q(i, j) = v;
        q(j, i) = v;
      }
    }
    const SparseMatrix sst = s_ * SparseMatrix(s_.transpose());
    for (Eigen::Index i = 0; i < sst.outerSize(); ++i)
      for (SparseMatrix::InnerIterator it(sst, i); it; ++it) q(it.row(), it.col()) += it.value();
    q *= ridge;
  }
  if (sigma.kind() == Covariance::Kind::ClassBlock && sigma.num_classes() > 0) {
    const Matrix v = apply_right(sigma.class_indicator());
    q.noalias() += sigma.variance() * v * v.transpose();
  }
  return q;
}

void QpProblem::validate() const {
  if (!constraints) throw ValidationError("qp: constraint matrix missing");
  if (mu.size() == 0) throw DimensionError("qp: empty mean vector");
  if (sigma.size() != mu.size()) throw DimensionError("qp: covariance size differs from mean length");
  if (constraints->cols() != mu.size()) throw DimensionError("qp: constraint columns differ from mean length");
  if (static_cast<Eigen::Index>(sense.size()) != constraints->rows()) {
    throw DimensionError("qp: one sense per constraint row required");
  }
  if (rhs.size() != 0 && rhs.size() != constraints->rows()) throw DimensionError("qp: rhs length differs from rows");
  if (!mu.allFinite() || (rhs.size() && !rhs.allFinite())) throw ValidationError("qp: non-finite data");
}

namespace {

// Newton systems (Q + diag(d)) dl = rhs for the complementarity problem
// w = Q l + b on the kept, normalised rows.
class LcpBackend {
 public:
  virtual ~LcpBackend() = default;
  virtual Vector q_times(const Vector& l) const = 0;
  virtual void factor(const Vector& d) = 0;
  virtual Vector solve(const Vector& rhs) const = 0;
};

class GramBackend final : public LcpBackend {
 public:
  explicit GramBackend(Matrix q) : q_(std::move(q)) {}
  Vector q_times(const Vector& l) const override { return q_.selfadjointView<Eigen::Lower>() * l; }
  void factor(const Vector& d) override {
    double shift = 0.0;
    const double scale = std::max(1.0, q_.diagonal().cwiseAbs().maxCoeff());
    for (int attempt = 0; attempt < 8; ++attempt) {
      work_ = q_;
      work_.diagonal() += d;
      work_.diagonal().array() += shift;
      llt_.compute(work_);
      if (llt_.info() == Eigen::Success) return;
      shift = shift == 0.0 ? 1e-14 * scale : shift * 100.0;
    }
    throw SolverError("qp: Newton matrix could not be factorised");
  }
  Vector solve(const Vector& rhs) const override { return llt_.solve(rhs); }
  const Matrix& q() const { return q_; }

 private:
  Matrix q_;
  Matrix work_;
  Eigen::LLT<Matrix> llt_;
};

// Q = T T' with T = A L (rows normalised); systems are reduced to n x n.
class PrimalBackend final : public LcpBackend {
 public:
  explicit PrimalBackend(Matrix t) : t_(std::move(t)) {}
  Vector q_times(const Vector& l) const override {
    const Vector z = t_.transpose() * l;
    return t_ * z;
  }
  void factor(const Vector& d) override {
    inv_d_ = d.cwiseInverse();
    const Matrix scaled = inv_d_.cwiseSqrt().asDiagonal() * t_;
    Matrix m = Matrix::Identity(t_.cols(), t_.cols());
    m.selfadjointView<Eigen::Lower>().rankUpdate(scaled.transpose());
    llt_.compute(m);
    if (llt_.info() != Eigen::Success) throw SolverError("qp: reduced Newton matrix could not be factorised");
  }
  Vector solve(const Vector& rhs) const override {
    const Vector scaled = inv_d_.cwiseProduct(rhs);
    const Vector dz = llt_.solve(t_.transpose() * scaled);
    return inv_d_.cwiseProduct(rhs - t_ * dz);
  }
  const Matrix& t() const { return t_; }

 private:
  Matrix t_;
  Vector inv_d_;
  Eigen::LLT<Matrix, Eigen::Lower> llt_;
};

double max_step(const Vector& v, const Vector& dv) {
  double alpha = 1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (dv(i) < 0.0) alpha = std::min(alpha, -v(i) / dv(i));
  return alpha;
}

struct IpmResult {
  Vector lambda;  // best iterate seen
  double merit = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
  bool infeasible = false;
};

IpmResult run_ipm(LcpBackend& backend, const Vector& b, double target, int max_iters) {
  const Eigen::Index m = b.size();
  IpmResult out;
  Vector l = Vector::Ones(m);
  Vector w = (backend.q_times(l) + b).cwiseMax(1.0);
  out.lambda = l;
  const double bscale = 1.0 + b.cwiseAbs().maxCoeff();
  int since_best = 0;

  for (int it = 0; it < max_iters; ++it) {
    const Vector wt = backend.q_times(l) + b;
    const Vector r1 = wt - w;
    const double viol = (-wt).cwiseMax(0.0).maxCoeff();
    const double comp = l.cwiseProduct(wt).cwiseAbs().maxCoeff();
    const double merit = std::max(viol, comp);
    out.iterations = it;
    if (merit < out.merit) {
      out.merit = merit;
      out.lambda = l;
      since_best = 0;
    } else if (++since_best >= 4) {
      break;
    }
    if (merit < target) {
      out.converged = true;
      break;
    }
    const double lmax = l.maxCoeff();
    if (lmax > 1e9 * bscale) {
      const Vector y = l / lmax;
      const double curvature = y.dot(backend.q_times(y));
      const double drift = b.dot(y);
      if (drift < 0.0 && curvature < 1e-9 * -drift) {
        out.infeasible = true;
        break;
      }
    }

    const double mu = l.dot(w) / static_cast<double>(m);
    const Vector d = w.cwiseQuotient(l);
    try {
      backend.factor(d);
    } catch (const SolverError&) {
      break;
    }

    const Vector dl_aff = backend.solve(-r1 - w);
    const Vector dw_aff = -w - d.cwiseProduct(dl_aff);
    const double a_aff = std::min(max_step(l, dl_aff), max_step(w, dw_aff));
    const double mu_aff = (l + a_aff * dl_aff).dot(w + a_aff * dw_aff) / static_cast<double>(m);
    const double sigma = std::pow(std::max(0.0, mu_aff) / mu, 3);

    const Vector rc = l.cwiseProduct(w) + dl_aff.cwiseProduct(dw_aff) - Vector::Constant(m, sigma * mu);
    const Vector dl = backend.solve(-r1 - rc.cwiseQuotient(l));
    const Vector dw = (-rc - w.cwiseProduct(dl)).cwiseQuotient(l);
    if (!dl.allFinite() || !dw.allFinite()) break;
    const double alpha = std::min(1.0, 0.995 * std::min(max_step(l, dl), max_step(w, dw)));
    if (alpha < 1e-12) break;
    l += alpha * dl;
    w += alpha * dw;
    out.iterations = it + 1;
  }
  return out;
}

// F with F F' = Q from a diagonally pivoted LDL' factorisation, keeping the
// pivots that do not vanish.
Matrix gram_factor(const Matrix& q) {
  const Eigen::LDLT<Matrix> ldlt(q);
  const Vector d = ldlt.vectorD();
  const double dmax = std::max(0.0, d.maxCoeff());
  std::vector<Eigen::Index> cols;
  for (Eigen::Index k = 0; k < d.size(); ++k)
    if (d(k) > 1e-13 * dmax) cols.push_back(k);
  const Matrix l = ldlt.matrixL();
  Matrix f(q.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) f.col(static_cast<Eigen::Index>(c)) = std::sqrt(d(cols[c])) * l.col(cols[c]);
  return ldlt.transpositionsP().transpose() * f;
}

// Change caused by a unit step on candidate row p: working multipliers move
// by -r, w moves by u. den is the squared length of p's part orthogonal to
// the working rows.
struct Direction {
  Vector r;
  double den = 0.0;
  Vector u;
};

// T_A' = J R with J orthogonal (n x n) and R upper triangular, kept up to
// date by Givens rotations. The orthogonal part of a new row is read off
// directly instead of by cancellation.
class QrSet {
 public:
  explicit QrSet(const Matrix& t) : t_(t), j_(Matrix::Identity(t.cols(), t.cols())) {}

  const std::vector<Eigen::Index>& rows() const { return active_; }

  Direction direction(Eigen::Index p) const {
    const Eigen::Index n = t_.cols();
    const Eigen::Index k = r_.rows();
    const Vector d = j_.transpose() * t_.row(p).transpose();
    Direction out;
    out.r = r_.triangularView<Eigen::Upper>().solve(d.head(k));
    out.den = d.tail(n - k).squaredNorm();
    const Vector z = j_.rightCols(n - k) * d.tail(n - k);
    out.u = t_ * z;
    return out;
  }

  void add(Eigen::Index p) {
    const Eigen::Index n = t_.cols();
    const Eigen::Index k = r_.rows();
    Vector d = j_.transpose() * t_.row(p).transpose();
    for (Eigen::Index i = n - 1; i > k; --i) rotate(d, i - 1, i);
    r_.conservativeResize(k + 1, k + 1);
    r_.row(k).setZero();
    r_.col(k).head(k) = d.head(k);
    r_(k, k) = d(k);
    active_.push_back(p);
  }

  void remove(std::size_t pos) {
    const auto j = static_cast<Eigen::Index>(pos);
    const Eigen::Index k = r_.rows();
    Matrix h(k, k - 1);
    h.leftCols(j) = r_.leftCols(j);
    h.rightCols(k - 1 - j) = r_.rightCols(k - 1 - j);
    for (Eigen::Index i = j; i < k - 1; ++i) {
      const double a = h(i, i);
      const double b = h(i + 1, i);
      const double rho = std::hypot(a, b);
      if (rho == 0.0) continue;
      const double c = a / rho;
      const double sn = b / rho;
      for (Eigen::Index col = i; col < k - 1; ++col) {
        const double x = h(i, col);
        const double y = h(i + 1, col);
        h(i, col) = c * x + sn * y;
        h(i + 1, col) = -sn * x + c * y;
      }
      rotate_columns(i, c, sn);
    }
    r_ = h.topRows(k - 1);
    active_.erase(active_.begin() + static_cast<std::ptrdiff_t>(pos));
  }

  // Solves Q_AA x = rhs with Q_AA = R'R.
  Vector solve(const Vector& rhs) const {
    const auto upper = r_.triangularView<Eigen::Upper>();
    return upper.solve(upper.transpose().solve(rhs));
  }

  // den at or below this counts as linearly dependent.
  static constexpr double kDependent = 1e-12;

 private:
  // Zeroes d(i) against d(i - 1) and applies the rotation to J.
  void rotate(Vector& d, Eigen::Index i0, Eigen::Index i1) {
    const double rho = std::hypot(d(i0), d(i1));
    if (rho == 0.0) return;
    const double c = d(i0) / rho;
    const double sn = d(i1) / rho;
    d(i0) = rho;
    d(i1) = 0.0;
    rotate_columns(i0, c, sn);
  }
  void rotate_columns(Eigen::Index i, double c, double sn) {
    const Vector a = j_.col(i);
    const Vector b = j_.col(i + 1);
    j_.col(i) = c * a + sn * b;
    j_.col(i + 1) = -sn * a + c * b;
  }

  const Matrix& t_;
  Matrix j_;
  Matrix r_;
  std::vector<Eigen::Index> active_;
};

struct ActiveSetResult {
  Vector lambda;
  int steps = 0;
  bool infeasible = false;
  bool finished = false;
};

// Dual active-set method of Goldfarb and Idnani on w = Q l + b: starts from
// l = 0 and adds the most violated row until none is left. Rows dependent on
// the working set take pure dual steps that drop a blocking row. Needs no
// interior point, so it copes with rows that can only hold with equality.
// Rows are added while violated by more than `tol`. A dependent row
// p = sum r_j a_j with every r_j <= 0 proves infeasibility when its
// requirement h_p exceeds sum r_j h_j by more than `infeasible_tol`;
// otherwise it is set aside.
ActiveSetResult dual_active_set(const LcpBackend& backend, QrSet& set, const Vector& b, const Vector& h,
                                double tol, double infeasible_tol, int max_steps) {
  const Eigen::Index m = b.size();
  ActiveSetResult out;
  Vector l = Vector::Zero(m);
  Vector w = b;
  std::vector<char> state(static_cast<std::size_t>(m), 0);  // 1 working, 2 skipped
  int next_refresh = 64;

  while (out.steps < max_steps) {
    Eigen::Index p = -1;
    for (Eigen::Index i = 0; i < m; ++i)
      if (!state[static_cast<std::size_t>(i)] && w(i) < -tol && (p < 0 || w(i) < w(p))) p = i;
    if (p < 0) {
      out.finished = true;
      break;
    }
    while (out.steps < max_steps) {
      ++out.steps;
      const Direction dir = set.direction(p);
      const std::vector<Eigen::Index>& active = set.rows();
      double t1 = std::numeric_limits<double>::infinity();
      std::size_t block = 0;
      for (std::size_t i = 0; i < active.size(); ++i) {
        const double ri = dir.r(static_cast<Eigen::Index>(i));
        if (ri > 1e-14) {
          const double ratio = l(active[i]) / ri;
          if (ratio < t1) {
            t1 = ratio;
            block = i;
          }
        }
      }
      const double t2 = dir.den > QrSet::kDependent ? -w(p) / dir.den : std::numeric_limits<double>::infinity();
      if (!std::isfinite(t1) && !std::isfinite(t2)) {
        double implied = 0.0;
        for (std::size_t i = 0; i < active.size(); ++i) implied += dir.r(static_cast<Eigen::Index>(i)) * h(active[i]);
        if (h(p) - implied > infeasible_tol) {
          out.infeasible = true;
          out.lambda = l;
          return out;
        }
        state[static_cast<std::size_t>(p)] = 2;
        break;
      }
      const double t = std::min(t1, t2);
      for (std::size_t i = 0; i < active.size(); ++i) l(active[i]) -= t * dir.r(static_cast<Eigen::Index>(i));
      l(p) += t;
      w += t * dir.u;
      if (t2 <= t1) {
        set.add(p);
        state[static_cast<std::size_t>(p)] = 1;
        break;
      }
      const Eigen::Index gone = active[block];
      l(gone) = 0.0;
      state[static_cast<std::size_t>(gone)] = 0;
      set.remove(block);
    }
    // Refresh now and then to stop rounding from accumulating.
    if (out.steps >= next_refresh) {
      w = backend.q_times(l) + b;
      next_refresh = out.steps + 64;
    }
  }
  // Final solve on the working set so its rows hold with equality.
  const std::vector<Eigen::Index>& active = set.rows();
  if (!active.empty()) {
    Vector rhs(static_cast<Eigen::Index>(active.size()));
    for (std::size_t i = 0; i < active.size(); ++i) rhs(static_cast<Eigen::Index>(i)) = -b(active[i]);
    const Vector la = set.solve(rhs);
    if (la.allFinite() && la.minCoeff() >= 0.0)
      for (std::size_t i = 0; i < active.size(); ++i) l(active[i]) = la(static_cast<Eigen::Index>(i));
  }
  out.lambda = l.cwiseMax(0.0);
  return out;
}

struct Evaluation {
  Vector x;
  Vector multipliers;  // per original row
  double kkt = std::numeric_limits<double>::infinity();
  double max_violation = 0.0;
  double objective = 0.0;
  int active = 0;
};

}  // namespace

QpSolution solve_qp(const QpProblem& problem, const QpOptions& options) {
  problem.validate();
  if (!(options.tol > 0.0) || options.max_iters < 1) throw ValidationError("qp: tol and max_iters must be positive");
  const ConstraintMatrix& a = *problem.constraints;
  const Eigen::Index n = problem.num_vars();
  const Eigen::Index m = problem.num_rows();
  const Vector h = problem.rhs.size() ? problem.rhs : Vector::Zero(m);
  Vector sign(m);
  for (Eigen::Index i = 0; i < m; ++i) sign(i) = problem.sense[i] == RowSense::GreaterEqual ? 1.0 : -1.0;

  QpSolution sol;
  sol.route = options.route;
  if (sol.route == QpRoute::Auto) {
    const bool dense_ok = n <= 6000 && static_cast<double>(m) * static_cast<double>(n) <= 6e7;
    sol.route = (n <= m && dense_ok) ? QpRoute::Primal : QpRoute::Gram;
  }

  // Row norms in the Sigma metric and the Newton backend.
  Vector norms(m);
  Matrix whitened;  // primal route: A L
  Matrix lfactor;
  Matrix q_full;
  if (m > 0) {
    if (sol.route == QpRoute::Primal) {
      lfactor = problem.sigma.cholesky_factor();
      whitened.noalias() = a.to_dense() * lfactor;
      norms = whitened.rowwise().norm();
    } else {
      q_full = a.gram(problem.sigma);
      norms = q_full.diagonal().cwiseMax(0.0).cwiseSqrt();
    }
  }
  const double norm_max = m ? norms.maxCoeff() : 0.0;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (norms(i) > 1e-10 * norm_max && norms(i) > 0.0) {
      keep.push_back(i);
    } else if (sign(i) * h(i) > 1e-12) {
      sol.status = QpStatus::Infeasible;
      sol.message = "row " + std::to_string(i) + " vanishes but requires a positive margin";
      sol.r = problem.mu;
      sol.multipliers = Vector::Zero(m);
      return sol;
    }
  }
  // Identical normalised rows are merged, keeping the largest requirement.
  if (keep.size() > 1) {
    auto normalised_h = [&](Eigen::Index i) { return sign(i) * h(i) / norms(i); };
    std::mt19937_64 gen(0x5eed);
    std::normal_distribution<double> normal;
    Vector sig(static_cast<Eigen::Index>(keep.size()));
    if (sol.route == QpRoute::Primal) {
      Vector g(n);
      for (Eigen::Index j = 0; j < n; ++j) g(j) = normal(gen);
      for (std::size_t k = 0; k < keep.size(); ++k)
        sig(static_cast<Eigen::Index>(k)) = sign(keep[k]) * whitened.row(keep[k]).dot(g) / norms(keep[k]);
    } else {
      Vector g(static_cast<Eigen::Index>(keep.size()));
      for (Eigen::Index j = 0; j < g.size(); ++j) g(j) = normal(gen);
      for (std::size_t k = 0; k < keep.size(); ++k) {
        double acc = 0.0;
        for (std::size_t j = 0; j < keep.size(); ++j)
          acc += sign(keep[j]) * q_full(keep[k], keep[j]) / norms(keep[j]) * g(static_cast<Eigen::Index>(j));
        sig(static_cast<Eigen::Index>(k)) = sign(keep[k]) * acc / norms(keep[k]);
      }
    }
    auto same_row = [&](Eigen::Index i, Eigen::Index j) {
      if (sol.route == QpRoute::Primal) {
        return (sign(i) / norms(i) * whitened.row(i) - sign(j) / norms(j) * whitened.row(j)).cwiseAbs().maxCoeff() <=
               1e-12;
      }
      return sign(i) * sign(j) * q_full(i, j) / (norms(i) * norms(j)) >= 1.0 - 1e-12;
    };
    std::vector<std::size_t> order(keep.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
      const double sx = sig(static_cast<Eigen::Index>(x));
      const double sy = sig(static_cast<Eigen::Index>(y));
      return sx < sy || (sx == sy && x < y);
    });
    std::vector<char> drop(keep.size(), 0);
    for (std::size_t p = 0; p < order.size();) {
      const std::size_t leader = order[p];
      std::size_t best = leader;
      std::size_t q = p + 1;
      const double sl = sig(static_cast<Eigen::Index>(leader));
      while (q < order.size() && std::abs(sig(static_cast<Eigen::Index>(order[q])) - sl) <= 1e-9 * (1.0 + std::abs(sl)) &&
             same_row(keep[leader], keep[order[q]])) {
        const std::size_t c = order[q];
        const double hc = normalised_h(keep[c]);
        const double hb = normalised_h(keep[best]);
        if (hc > hb || (hc == hb && c < best)) {
          drop[best] = 1;
          best = c;
        } else {
          drop[c] = 1;
        }
        ++q;
      }
      p = q;
    }
    std::vector<Eigen::Index> unique;
    for (std::size_t k = 0; k < keep.size(); ++k)
      if (!drop[k]) unique.push_back(keep[k]);
    sol.merged_rows = static_cast<int>(keep.size() - unique.size());
    keep = std::move(unique);
  }
  const Eigen::Index mk = static_cast<Eigen::Index>(keep.size());
  sol.dropped_rows = static_cast<int>(m - mk) - sol.merged_rows;

  Vector s(mk), sg(mk), hk(mk);
  for (Eigen::Index k = 0; k < mk; ++k) {
    s(k) = norms(keep[k]);
    sg(k) = sign(keep[k]);
    hk(k) = sign(keep[k]) * h(keep[k]) / s(k);
  }
  const Vector a_mu = m ? a.multiply(problem.mu) : Vector();
  Vector b(mk);
  for (Eigen::Index k = 0; k < mk; ++k) b(k) = sg(k) * a_mu(keep[k]) / s(k) - hk(k);

  const Vector wscale = s.cwiseInverse().cwiseProduct(sg);
  auto evaluate = [&](const Vector& lk) {
    Evaluation ev;
    ev.multipliers = Vector::Zero(m);
    Vector signed_full = Vector::Zero(m);
    for (Eigen::Index k = 0; k < mk; ++k) {
      ev.multipliers(keep[k]) = lk(k) / s(k);
      signed_full(keep[k]) = sg(k) * lk(k) / s(k);
    }
    Vector at_l = m ? a.multiply_transpose(signed_full) : Vector::Zero(n);
    Vector step;
    if (sol.route == QpRoute::Primal && mk > 0) {
      Vector z = Vector::Zero(n);
      for (Eigen::Index k = 0; k < mk; ++k) z.noalias() += (lk(k) * sg(k) / s(k)) * whitened.row(keep[k]).transpose();
      step = lfactor * z;
    } else {
      step = problem.sigma.apply(at_l);
    }
    ev.x = problem.mu + step;
    ev.objective = 0.5 * at_l.dot(step);
    const Vector ax = m ? a.multiply(ev.x) : Vector();
    double kkt = 0.0;
    for (Eigen::Index k = 0; k < mk; ++k) {
      const double slack = sg(k) * ax(keep[k]) / s(k) - hk(k);
      kkt = std::max({kkt, -slack, std::abs(std::min(lk(k), slack)), -lk(k)});
      if (lk(k) > slack) ++ev.active;
    }
    for (Eigen::Index i = 0; i < m; ++i) ev.max_violation = std::max(ev.max_violation, sign(i) * (h(i) - ax(i)));
    const Vector stat = step - problem.sigma.apply(at_l);
    kkt = std::max(kkt, stat.cwiseAbs().maxCoeff() / (1.0 + step.cwiseAbs().maxCoeff()));
    ev.kkt = kkt;
    return ev;
  };
  auto finish = [&](const Evaluation& ev, int iterations) {
    sol.r = ev.x;
    sol.multipliers = ev.multipliers;
    sol.kkt_residual = ev.kkt;
    sol.max_violation = ev.max_violation;
    sol.objective = ev.objective;
    sol.iterations = iterations;
    sol.active_rows = ev.active;
    if (sol.status != QpStatus::Infeasible) {
      sol.status = (ev.kkt < options.tol && ev.max_violation <= options.tol) ? QpStatus::Optimal : QpStatus::MaxIter;
    }
    return sol;
  };

  // The prior mean already satisfies every row.
  if (mk == 0 || b.minCoeff() >= -1e-13) return finish(evaluate(Vector::Zero(mk)), 0);

  if (hk.maxCoeff() > 0.0 && static_cast<double>(mk) * static_cast<double>(2 * n + 1 + 2 * mk) <= 4e6) {
    // Phase 1: maximise -t subject to A (x+ - x-) + t >= h.
    const Matrix dense = sol.route == QpRoute::Primal ? whitened : a.to_dense();
    LinearProgram lp;
    lp.a = Matrix::Zero(mk, 2 * n + 1);
    for (Eigen::Index k = 0; k < mk; ++k) {
      const Eigen::RowVectorXd row = (sg(k) / s(k)) * dense.row(keep[k]);
      lp.a.row(k).head(n) = row;
      lp.a.row(k).segment(n, n) = -row;
      lp.a(k, 2 * n) = 1.0;
    }
    lp.b = hk;
    lp.objective = Vector::Zero(2 * n + 1);
    lp.objective(2 * n) = -1.0;
    lp.sense.assign(static_cast<std::size_t>(mk), ConstraintSense::GreaterEqual);
    const LpSolution feas = solve_lp(lp);
    if (feas.status == LpStatus::Optimal && feas.objective < -1e-9) {
      sol.status = QpStatus::Infeasible;
      sol.message = "phase 1: constraints cannot all be met (minimum shortfall " + std::to_string(-feas.objective) + ")";
      return finish(evaluate(Vector::Zero(mk)), 0);
    }
  }

  std::unique_ptr<LcpBackend> backend;
  if (sol.route == QpRoute::Primal) {
    Matrix t(mk, n);
    for (Eigen::Index k = 0; k < mk; ++k) t.row(k) = (sg(k) / s(k)) * whitened.row(keep[k]);
    backend = std::make_unique<PrimalBackend>(std::move(t));
  } else {
    Matrix q(mk, mk);
    for (Eigen::Index j = 0; j < mk; ++j)
      for (Eigen::Index i = 0; i < mk; ++i) q(i, j) = q_full(keep[i], keep[j]) * wscale(i) * wscale(j);
    q_full.resize(0, 0);
    backend = std::make_unique<GramBackend>(std::move(q));
  }

  const IpmResult ipm = run_ipm(*backend, b, 1e-3 * options.tol, options.max_iters);
  if (ipm.infeasible) {
    sol.status = QpStatus::Infeasible;
    sol.message = "dual iterates diverge along a direction certifying infeasibility";
    return finish(evaluate(ipm.lambda), ipm.iterations);
  }
  Evaluation best = evaluate(ipm.lambda);

  int extra_steps = 0;
  if (options.polish && best.kkt >= 1e-3 * options.tol) {
    Matrix rows_factor;
    const auto* primal = dynamic_cast<const PrimalBackend*>(backend.get());
    if (!primal) rows_factor = gram_factor(dynamic_cast<const GramBackend&>(*backend).q());
    QrSet set(primal ? primal->t() : rows_factor);
    const ActiveSetResult as =
        dual_active_set(*backend, set, b, hk, 0.1 * options.tol, options.tol, 20 * static_cast<int>(mk) + 100);
    if (as.infeasible) {
      sol.status = QpStatus::Infeasible;
      sol.message = "active set: a row is implied by working rows with a smaller requirement";
      return finish(evaluate(as.lambda), ipm.iterations + as.steps);
    }
    Evaluation refined = evaluate(as.lambda);
    if (refined.kkt < best.kkt) {
      best = std::move(refined);
      sol.polished = true;
      extra_steps = as.steps;
    }
  }
  if (!ipm.converged && !sol.polished) sol.message = "interior point stopped before reaching the target accuracy";
  return finish(best, ipm.iterations + extra_steps);
}

void write_qp_text(std::ostream& out, const QpProblem& problem) {
  problem.validate();
  const Eigen::Index n = problem.num_vars();
  const Eigen::Index m = problem.num_rows();
  const Eigen::IOFormat row_fmt(Eigen::FullPrecision, Eigen::DontAlignCols, " ", " ");
  out.precision(17);
  out << "qp " << n << ' ' << m << '\n';
  out << problem.mu.transpose().format(row_fmt) << '\n';
  const Matrix sigma = problem.sigma.to_dense();
  for (Eigen::Index i = 0; i < n; ++i) out << sigma.row(i).format(row_fmt) << '\n';
  const Matrix a = problem.constraints->to_dense();
  for (Eigen::Index i = 0; i < m; ++i) {
    out << (problem.sense[i] == RowSense::GreaterEqual ? ">=" : "<=") << ' '
        << (problem.rhs.size() ? problem.rhs(i) : 0.0) << ' ' << a.row(i).format(row_fmt) << '\n';
  }
}

}  // namespace zsirl
