#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <stdexcept>
#include <string>

namespace zsirl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Triplet = Eigen::Triplet<double>;

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input: bad grid, non-stochastic policy, unknown enum name.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Operand shapes do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A numerical routine failed (singular solve, non-convergence, infeasible program).
class SolverError : public Error {
 public:
  using Error::Error;
};

class InfeasibleError : public SolverError {
 public:
  using SolverError::SolverError;
};

// Kernels that have an OpenMP implementation also keep a serial one; both
// must produce bit-identical results.
enum class Execution { Serial, Parallel };

enum class Player { One = 1, Two = 2 };

}  // namespace zsirl
