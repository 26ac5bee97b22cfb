#pragma once

#include <vector>

#include "zsirl/types.hpp"

namespace zsirl {

// Prior covariance of a reward vector. Three representations:
//   ScaledIdentity  variance * I
//   Dense           an explicit symmetric PSD matrix
//   ClassBlock      variance * U U' + ridge * I, where U is the 0/1 indicator
//                   of a partition of the entries into equivalence classes
//                   (entries marked -1 belong to no class)
// The ClassBlock form is applied in O(n) and never materialised unless asked.
class Covariance {
 public:
  enum class Kind { ScaledIdentity, Dense, ClassBlock };

  static Covariance identity(Eigen::Index n, double variance = 1.0);
  static Covariance dense(Matrix sigma);
  static Covariance class_block(std::vector<int> class_of, double variance, double ridge);

  Kind kind() const { return kind_; }
  Eigen::Index size() const { return n_; }

  Vector apply(const Vector& x) const;
  Matrix apply(const Matrix& x) const;
  Matrix to_dense() const;
  double trace() const;

  // Lower-triangular L with L L' = Sigma. A Sigma that is not numerically
  // positive definite gets ridge 1e-6 * trace / n added first.
  Matrix cholesky_factor() const;

  // Same covariance scaled by c > 0.
  Covariance scaled(double c) const;

  double variance() const { return variance_; }
  double ridge() const { return ridge_; }
  const std::vector<int>& class_of() const { return class_of_; }
  int num_classes() const { return num_classes_; }
  // n x num_classes indicator matrix U.
  SparseMatrix class_indicator() const;

 private:
  Kind kind_ = Kind::ScaledIdentity;
  Eigen::Index n_ = 0;
  double variance_ = 1.0;
  double ridge_ = 0.0;
  Matrix dense_;
  std::vector<int> class_of_;
  int num_classes_ = 0;
};

}  // namespace zsirl
