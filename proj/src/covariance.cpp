#include "zsirl/covariance.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>

namespace zsirl {

Covariance Covariance::identity(Eigen::Index n, double variance) {
  if (n <= 0) throw ValidationError("covariance size must be positive");
  if (!(variance > 0.0)) throw ValidationError("identity covariance needs a positive variance");
  Covariance c;
  c.kind_ = Kind::ScaledIdentity;
  c.n_ = n;
  c.variance_ = variance;
  return c;
}

Covariance Covariance::dense(Matrix sigma) {
  if (sigma.rows() != sigma.cols() || sigma.rows() == 0) throw DimensionError("dense covariance must be square");
  if (!sigma.allFinite()) throw ValidationError("covariance has non-finite entries");
  const double asym = (sigma - sigma.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * std::max(1.0, sigma.cwiseAbs().maxCoeff())) {
    throw ValidationError("covariance is not symmetric");
  }
  Covariance c;
  c.kind_ = Kind::Dense;
  c.n_ = sigma.rows();
  c.dense_ = 0.5 * (sigma + sigma.transpose());
  return c;
}

Covariance Covariance::class_block(std::vector<int> class_of, double variance, double ridge) {
  if (class_of.empty()) throw ValidationError("class covariance needs at least one entry");
  if (!(variance > 0.0) || !(ridge >= 0.0)) throw ValidationError("class covariance needs variance > 0, ridge >= 0");
  Covariance c;
  c.kind_ = Kind::ClassBlock;
  c.n_ = static_cast<Eigen::Index>(class_of.size());
  c.variance_ = variance;
  c.ridge_ = ridge;
  c.num_classes_ = 0;
  for (int k : class_of) {
    if (k < -1) throw ValidationError("class index must be >= -1");
    c.num_classes_ = std::max(c.num_classes_, k + 1);
  }
  c.class_of_ = std::move(class_of);
  return c;
}

Vector Covariance::apply(const Vector& x) const { return apply(Matrix(x)).col(0); }

Matrix Covariance::apply(const Matrix& x) const {
  if (x.rows() != n_) throw DimensionError("covariance apply: row mismatch");
  switch (kind_) {
    case Kind::ScaledIdentity: return variance_ * x;
    case Kind::Dense: return dense_ * x;
    case Kind::ClassBlock: {
      Matrix sums = Matrix::Zero(num_classes_, x.cols());
      for (Eigen::Index i = 0; i < n_; ++i)
        if (class_of_[i] >= 0) sums.row(class_of_[i]) += x.row(i);
      Matrix out = ridge_ * x;
      for (Eigen::Index i = 0; i < n_; ++i)
        if (class_of_[i] >= 0) out.row(i) += variance_ * sums.row(class_of_[i]);
      return out;
    }
  }
  return x;
}

Matrix Covariance::to_dense() const {
  switch (kind_) {
    case Kind::ScaledIdentity: return variance_ * Matrix::Identity(n_, n_);
    case Kind::Dense: return dense_;
    case Kind::ClassBlock: {
      Matrix out = ridge_ * Matrix::Identity(n_, n_);
      for (Eigen::Index i = 0; i < n_; ++i) {
        if (class_of_[i] < 0) continue;
        for (Eigen::Index j = 0; j < n_; ++j)
          if (class_of_[j] == class_of_[i]) out(i, j) += variance_;
      }
      return out;
    }
  }
  return {};
}

double Covariance::trace() const {
  switch (kind_) {
    case Kind::ScaledIdentity: return variance_ * static_cast<double>(n_);
    case Kind::Dense: return dense_.trace();
    case Kind::ClassBlock: {
      double t = ridge_ * static_cast<double>(n_);
      for (int k : class_of_)
        if (k >= 0) t += variance_;
      return t;
    }
  }
  return 0.0;
}

Matrix Covariance::cholesky_factor() const {
  if (kind_ == Kind::ScaledIdentity) return std::sqrt(variance_) * Matrix::Identity(n_, n_);
  Matrix sigma = to_dense();
  Eigen::LLT<Matrix> llt(sigma);
  const double floor = 1e-12 * std::max(1.0, trace() / static_cast<double>(n_));
  bool ok = llt.info() == Eigen::Success;
  if (ok) {
    const Matrix l = llt.matrixL();
    ok = l.diagonal().minCoeff() > std::sqrt(floor);
  }
  if (!ok) {
    sigma.diagonal().array() += 1e-6 * trace() / static_cast<double>(n_);
    llt.compute(sigma);
    if (llt.info() != Eigen::Success) throw SolverError("covariance is not positive semidefinite");
  }
  return llt.matrixL();
}

Covariance Covariance::scaled(double c) const {
  if (!(c > 0.0)) throw ValidationError("covariance scale must be positive");
  Covariance out = *this;
  out.variance_ *= c;
  out.ridge_ *= c;
  out.dense_ *= c;
  return out;
}

SparseMatrix Covariance::class_indicator() const {
  if (kind_ != Kind::ClassBlock) throw ValidationError("class_indicator: covariance has no class structure");
  std::vector<Triplet> entries;
  for (Eigen::Index i = 0; i < n_; ++i)
    if (class_of_[i] >= 0) entries.emplace_back(i, class_of_[i], 1.0);
  SparseMatrix u(n_, num_classes_);
  u.setFromTriplets(entries.begin(), entries.end());
  return u;
}

}  // namespace zsirl
