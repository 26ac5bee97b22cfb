#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "zsirl/covariance.hpp"
#include "zsirl/types.hpp"

namespace zsirl {

// Linear operator A (m x n) seen by the QP solver. Besides products it must
// provide the Gram matrix A Sigma A', which is all the dual route needs.
class ConstraintMatrix {
 public:
  virtual ~ConstraintMatrix() = default;
  virtual Eigen::Index rows() const = 0;
  virtual Eigen::Index cols() const = 0;
  virtual Vector multiply(const Vector& x) const = 0;
  virtual Vector multiply_transpose(const Vector& y) const = 0;
  virtual Matrix to_dense() const = 0;
  // Dense copy of rows [start, start + count).
  virtual Matrix row_block(Eigen::Index start, Eigen::Index count) const = 0;
  virtual Matrix gram(const Covariance& sigma) const;
  // Largest absolute entry of every row, computed block by block.
  Vector row_max_abs() const;
};

class DenseConstraints final : public ConstraintMatrix {
 public:
  explicit DenseConstraints(Matrix a) : a_(std::move(a)) {}
  Eigen::Index rows() const override { return a_.rows(); }
  Eigen::Index cols() const override { return a_.cols(); }
  Vector multiply(const Vector& x) const override { return a_ * x; }
  Vector multiply_transpose(const Vector& y) const override { return a_.transpose() * y; }
  Matrix to_dense() const override { return a_; }
  Matrix row_block(Eigen::Index start, Eigen::Index count) const override { return a_.middleRows(start, count); }
  Matrix gram(const Covariance& sigma) const override;
  const Matrix& matrix() const { return a_; }

 private:
  Matrix a_;
};

// A = S + W B with S sparse (m x n), W dense (m x k), B sparse (k x n).
// The joint-reward constraints have this shape with k = N much smaller
// than n = N*M*M, so A is never formed.
class SparsePlusProductConstraints final : public ConstraintMatrix {
 public:
  SparsePlusProductConstraints(SparseMatrix s, Matrix w, SparseMatrix b);
  Eigen::Index rows() const override { return s_.rows(); }
  Eigen::Index cols() const override { return s_.cols(); }
  Vector multiply(const Vector& x) const override;
  Vector multiply_transpose(const Vector& y) const override;
  Matrix to_dense() const override;
  Matrix row_block(Eigen::Index start, Eigen::Index count) const override;
  Matrix gram(const Covariance& sigma) const override;

 private:
  // A U = S U + W (B U) for a sparse n x k' matrix U.
  Matrix apply_right(const SparseMatrix& u) const;

  SparseMatrix s_;
  Matrix w_;
  SparseMatrix b_;
};

enum class RowSense { GreaterEqual, LessEqual };

// minimize 1/2 (r - mu)' Sigma^{-1} (r - mu)  subject to  row_i(A) r (sense_i) rhs_i.
struct QpProblem {
  Vector mu;
  Covariance sigma;
  std::shared_ptr<const ConstraintMatrix> constraints;
  std::vector<RowSense> sense;
  // Empty means all zero.
  Vector rhs;

  Eigen::Index num_vars() const { return mu.size(); }
  Eigen::Index num_rows() const { return constraints ? constraints->rows() : 0; }
  void validate() const;
};

enum class QpStatus { Optimal, MaxIter, Infeasible };
std::string_view to_string(QpStatus status);

// Primal: Newton systems of size n in whitened variables z, x = mu + L z.
// Gram: Newton systems of size m on the dual, x = mu + Sigma A' lambda.
enum class QpRoute { Auto, Primal, Gram };
std::string_view to_string(QpRoute route);

struct QpOptions {
  double tol = 1e-8;
  int max_iters = 200;
  QpRoute route = QpRoute::Auto;
  // Finish with a dual active-set solve when the interior point falls short.
  bool polish = true;
};

struct QpSolution {
  QpStatus status = QpStatus::MaxIter;
  Vector r;
  // One per constraint row, >= 0, in the row's own scaling.
  Vector multipliers;
  // Max of primal violation, dual violation, complementarity |min(l, slack)|
  // and stationarity, measured on rows normalised to unit Sigma-norm.
  double kkt_residual = 0.0;
  // Largest violation of any row as given.
  double max_violation = 0.0;
  double objective = 0.0;
  // Interior point iterations plus active-set steps.
  int iterations = 0;
  QpRoute route = QpRoute::Auto;
  // Rows removed because they vanish, and rows merged into an identical one.
  int dropped_rows = 0;
  int merged_rows = 0;
  int active_rows = 0;
  bool polished = false;
  std::string message;
};

// Mehrotra predictor-corrector interior point on the dual complementarity
// problem, finished by a dual active-set method when needed. Rows that vanish are
// dropped (a vanishing row with positive requirement is infeasible). When any
// requirement is positive a Phase-1 feasibility check runs first. Sigma is
// never inverted.
QpSolution solve_qp(const QpProblem& problem, const QpOptions& options = {});

// Text dump: "qp n m" header, mu, dense Sigma, then one line per row holding
// sense (>= or <=), rhs and the dense coefficients.
void write_qp_text(std::ostream& out, const QpProblem& problem);

}  // namespace zsirl
