#pragma once

#include <string_view>
#include <vector>

#include "zsirl/types.hpp"

namespace zsirl {

enum class ConstraintSense { LessEqual, GreaterEqual, Equal };

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

std::string_view to_string(LpStatus status);

// maximize c'x  subject to  a x (sense) b,  x >= 0.
struct LinearProgram {
  Vector objective;
  Matrix a;
  Vector b;
  std::vector<ConstraintSense> sense;

  void validate() const;
};

struct LpSolution {
  LpStatus status = LpStatus::IterationLimit;
  Vector x;
  double objective = 0.0;
  // Dual multipliers of the rows, in the sign convention of the dual
  // "minimize b'y s.t. a'y >= c": y >= 0 on <= rows, y <= 0 on >= rows.
  Vector duals;
  // c_j - a_j'y; all <= tol at an optimum.
  Vector reduced_costs;
  int pivots = 0;
};

// Dense two-phase tableau simplex with Bland's rule (smallest-index entering
// column, smallest-index basic variable on ratio ties), so it never cycles and
// the returned vertex depends only on the input.
LpSolution solve_lp(const LinearProgram& lp, double tol = 1e-9, int max_pivots = 100000);

}  // namespace zsirl
