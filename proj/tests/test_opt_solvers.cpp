#include <doctest.h>

#include <random>
#include <sstream>

#include "helpers.hpp"
#include "zsirl/lp.hpp"
#include "zsirl/qp.hpp"

using namespace zsirl;
using testing_util::max_abs;

namespace {

QpProblem make_qp(Vector mu, Covariance sigma, Matrix a, std::vector<RowSense> sense, Vector rhs = {}) {
  QpProblem p;
  p.mu = std::move(mu);
  p.sigma = std::move(sigma);
  p.constraints = std::make_shared<DenseConstraints>(std::move(a));
  p.sense = std::move(sense);
  p.rhs = std::move(rhs);
  return p;
}

// All rows as a r >= h for the oracle.
void as_greater_equal(const QpProblem& p, Matrix& a, Vector& h) {
  a = p.constraints->to_dense();
  h = p.rhs.size() ? p.rhs : Vector::Zero(a.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    if (p.sense[static_cast<std::size_t>(i)] == RowSense::LessEqual) {
      a.row(i) *= -1.0;
      h(i) *= -1.0;
    }
  }
}

Matrix random_spd(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix x(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) x(i, j) = g(rng);
  return x * x.transpose() + 0.5 * Matrix::Identity(n, n);
}

double kkt_tol(const QpSolution& s) { return s.kkt_residual; }

}  // namespace

TEST_SUITE("opt_solvers") {

TEST_CASE("LP small cases") {
  LinearProgram lp{Vector::Ones(1), Matrix::Ones(1, 1), Vector::Ones(1), {ConstraintSense::LessEqual}};
  const LpSolution s = solve_lp(lp);
  CHECK(s.status == LpStatus::Optimal);
  CHECK(s.x(0) == doctest::Approx(1.0));

  // x + y = 3, x - y = 1 has the single point (2, 1).
  Matrix a(2, 2);
  a << 1, 1, 1, -1;
  LinearProgram eq{Vector::Zero(2), a, Vector(Eigen::Vector2d(3, 1)),
                   {ConstraintSense::Equal, ConstraintSense::Equal}};
  const LpSolution e = solve_lp(eq);
  CHECK(e.status == LpStatus::Optimal);
  CHECK(max_abs(e.x - Vector(Eigen::Vector2d(2, 1))) <= 1e-12);

  LinearProgram infeasible{Vector::Ones(1), Matrix::Ones(2, 1), Vector(Eigen::Vector2d(1, 2)),
                           {ConstraintSense::LessEqual, ConstraintSense::GreaterEqual}};
  CHECK(solve_lp(infeasible).status == LpStatus::Infeasible);

  LinearProgram unbounded{Vector::Ones(1), Matrix::Ones(1, 1), Vector::Ones(1), {ConstraintSense::GreaterEqual}};
  CHECK(solve_lp(unbounded).status == LpStatus::Unbounded);
}

TEST_CASE("random LPs match vertex enumeration") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> pick(0, 2);
  int checked = 0;
  for (int k = 0; k < 150; ++k) {
    const int n = 2 + k % 3;
    const int m = 2 + k % 4;
    Matrix a(m + 1, n);
    Vector b(m + 1);
    std::vector<ConstraintSense> sense;
    std::vector<int> code;
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) a(i, j) = std::round(4.0 * u(rng));
      b(i) = std::round(4.0 * u(rng)) + 1.0;
      const int c = k % 5 == 0 && i == 0 ? 2 : pick(rng) == 0 ? 1 : 0;
      code.push_back(c);
      sense.push_back(c == 0 ? ConstraintSense::LessEqual
                             : c == 1 ? ConstraintSense::GreaterEqual : ConstraintSense::Equal);
    }
    // A box keeps every problem bounded.
    a.row(m).setOnes();
    b(m) = 10.0;
    code.push_back(0);
    sense.push_back(ConstraintSense::LessEqual);
    Vector c(n);
    for (auto& v : c) v = std::round(4.0 * u(rng));

    const oracle::LpVertex truth = oracle::lp_vertex_enumeration(c, a, b, code);
    const LpSolution s = solve_lp(LinearProgram{c, a, b, sense});
    if (!truth.feasible) {
      CHECK(s.status == LpStatus::Infeasible);
      continue;
    }
    ++checked;
    REQUIRE(s.status == LpStatus::Optimal);
    CHECK(std::abs(s.objective - truth.objective) <= 1e-8);
    CHECK(s.x.minCoeff() >= -1e-9);
    CHECK(s.reduced_costs.maxCoeff() <= 1e-9);
    // Strong duality in the documented dual convention.
    CHECK(std::abs(b.dot(s.duals) - s.objective) <= 1e-8);
  }
  CHECK(checked > 50);
}

TEST_CASE("QP trivial cases") {
  // Feasible prior mean is returned as is.
  Matrix a(1, 2);
  a << 1, 1;
  const QpSolution s = solve_qp(make_qp(Vector(Eigen::Vector2d(1, 2)), Covariance::identity(2), a,
                                        {RowSense::GreaterEqual}));
  CHECK(s.status == QpStatus::Optimal);
  CHECK(max_abs(s.r - Vector(Eigen::Vector2d(1, 2))) <= 1e-10);
  CHECK(s.objective == doctest::Approx(0.0).epsilon(1e-12));

  // Projection of 1 onto r <= 0.
  const QpSolution p = solve_qp(make_qp(Vector::Ones(1), Covariance::identity(1), Matrix::Ones(1, 1),
                                        {RowSense::LessEqual}));
  CHECK(p.status == QpStatus::Optimal);
  CHECK(std::abs(p.r(0)) <= 1e-9);
  CHECK(p.multipliers(0) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("random 5-variable QPs match active-set enumeration") {
  std::mt19937_64 rng(5150);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    const int n = 5;
    const int m = 1 + k % 8;
    Vector mu(n);
    for (auto& v : mu) v = 2.0 * g(rng);
    Matrix a(m, n);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) a(i, j) = g(rng);
    std::vector<RowSense> sense;
    for (int i = 0; i < m; ++i) sense.push_back(i % 2 ? RowSense::LessEqual : RowSense::GreaterEqual);
    // Requirements chosen so a known point is feasible.
    Vector x0(n);
    for (auto& v : x0) v = g(rng);
    Vector rhs = a * x0;
    for (int i = 0; i < m; ++i) rhs(i) += (i % 2 ? 0.3 : -0.3);
    const Covariance sigma = k % 2 ? Covariance::dense(random_spd(rng, n)) : Covariance::identity(n, 0.5 + k % 3);
    const QpProblem prob = make_qp(mu, sigma, a, sense, rhs);

    Matrix ag;
    Vector h;
    as_greater_equal(prob, ag, h);
    const oracle::QpVertex truth = oracle::qp_active_set_enumeration(mu, sigma.to_dense(), ag, h);
    REQUIRE(truth.feasible);
    const QpSolution s = solve_qp(prob);
    REQUIRE(s.status == QpStatus::Optimal);
    CHECK(kkt_tol(s) < 1e-8);
    CHECK(max_abs(s.r - truth.r) <= 1e-6);
    CHECK(s.max_violation <= 1e-8);
    CHECK(s.objective <= truth.objective + 1e-8);
  }
}

TEST_CASE("scaling the covariance leaves the argmin") {
  std::mt19937_64 rng(9);
  const Matrix sig = random_spd(rng, 4);
  Matrix a(3, 4);
  a << 1, 2, 0, -1, 0, 1, 1, 1, -1, 0, 2, 0;
  const Vector mu = Vector::LinSpaced(4, -1.0, 2.0);
  const Vector rhs = Vector::Constant(3, 1.0);
  const std::vector<RowSense> sense(3, RowSense::GreaterEqual);
  const QpSolution base = solve_qp(make_qp(mu, Covariance::dense(sig), a, sense, rhs));
  const QpSolution scaled = solve_qp(make_qp(mu, Covariance::dense(sig).scaled(40.0), a, sense, rhs));
  REQUIRE(base.status == QpStatus::Optimal);
  REQUIRE(scaled.status == QpStatus::Optimal);
  CHECK(max_abs(base.r - scaled.r) <= 1e-7);
}

TEST_CASE("infeasible systems are reported") {
  Matrix a(2, 1);
  a << 1, 1;
  const QpSolution s = solve_qp(make_qp(Vector::Zero(1), Covariance::identity(1), a,
                                        {RowSense::GreaterEqual, RowSense::LessEqual}, Vector(Eigen::Vector2d(1, 0))));
  CHECK(s.status == QpStatus::Infeasible);
  // A vanishing row with a positive requirement.
  const QpSolution z = solve_qp(make_qp(Vector::Zero(2), Covariance::identity(2), Matrix::Zero(1, 2),
                                        {RowSense::GreaterEqual}, Vector::Ones(1)));
  CHECK(z.status == QpStatus::Infeasible);
}

TEST_CASE("duplicate and vanishing rows") {
  Matrix a(4, 2);
  a << 1, 0, 2, 0, 0, 0, 1, 1;
  const QpSolution s = solve_qp(make_qp(Vector(Eigen::Vector2d(-1, -1)), Covariance::identity(2), a,
                                        std::vector<RowSense>(4, RowSense::GreaterEqual)));
  CHECK(s.status == QpStatus::Optimal);
  CHECK(s.dropped_rows == 1);
  CHECK(s.merged_rows == 1);
  CHECK(max_abs(s.r - Vector(Eigen::Vector2d(0, 0))) <= 1e-8);
}

TEST_CASE("routes agree and runs are deterministic") {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix a(12, 6);
  for (int i = 0; i < 12; ++i)
    for (int j = 0; j < 6; ++j) a(i, j) = g(rng);
  Vector mu(6);
  for (auto& v : mu) v = g(rng);
  const QpProblem prob = make_qp(mu, Covariance::class_block({0, 0, 1, 1, -1, 2}, 1.0, 1e-3), a,
                                 std::vector<RowSense>(12, RowSense::GreaterEqual));
  QpOptions primal, gram;
  primal.route = QpRoute::Primal;
  gram.route = QpRoute::Gram;
  const QpSolution sp = solve_qp(prob, primal);
  const QpSolution sg = solve_qp(prob, gram);
  REQUIRE(sp.status == QpStatus::Optimal);
  REQUIRE(sg.status == QpStatus::Optimal);
  CHECK(max_abs(sp.r - sg.r) <= 1e-6);
  const QpSolution again = solve_qp(prob, primal);
  CHECK((again.r.array() == sp.r.array()).all());
}

TEST_CASE("structured constraints equal their dense form") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0.0, 1.0);
  auto sparse_random = [&](int r, int c, double density) {
    std::vector<Triplet> t;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j)
        if (u(rng) < density) t.emplace_back(i, j, g(rng));
    SparseMatrix s(r, c);
    s.setFromTriplets(t.begin(), t.end());
    return s;
  };
  const SparseMatrix s = sparse_random(7, 9, 0.3);
  Matrix w(7, 3);
  for (int i = 0; i < 7; ++i)
    for (int j = 0; j < 3; ++j) w(i, j) = g(rng);
  const SparseMatrix b = sparse_random(3, 9, 0.5);
  const SparsePlusProductConstraints c(s, w, b);
  const Matrix dense = Matrix(s) + w * Matrix(b);
  CHECK(max_abs(c.to_dense() - dense) <= 1e-14);
  CHECK(max_abs(c.row_block(2, 3) - dense.middleRows(2, 3)) <= 1e-14);
  const Vector x = Vector::LinSpaced(9, -1, 1);
  CHECK(max_abs(c.multiply(x) - dense * x) <= 1e-13);
  const Vector y = Vector::LinSpaced(7, 0, 2);
  CHECK(max_abs(c.multiply_transpose(y) - dense.transpose() * y) <= 1e-13);
  const Covariance sigma = Covariance::class_block({0, 1, 0, -1, 2, 2, 1, 0, -1}, 2.0, 0.1);
  CHECK(max_abs(c.gram(sigma) - dense * sigma.to_dense() * dense.transpose()) <= 1e-12);
  CHECK(max_abs(c.row_max_abs() - dense.cwiseAbs().rowwise().maxCoeff()) <= 1e-14);
}

TEST_CASE("covariance forms") {
  const Covariance cb = Covariance::class_block({0, 0, 1, -1}, 2.0, 0.5);
  Matrix expect(4, 4);
  expect << 2.5, 2, 0, 0, 2, 2.5, 0, 0, 0, 0, 2.5, 0, 0, 0, 0, 0.5;
  CHECK(max_abs(cb.to_dense() - expect) == 0.0);
  const Vector x = Vector::LinSpaced(4, 1, 4);
  CHECK(max_abs(cb.apply(x) - expect * x) <= 1e-14);
  CHECK(cb.trace() == doctest::Approx(8.0));
  const Matrix l = cb.cholesky_factor();
  CHECK(max_abs(l * l.transpose() - expect) <= 1e-12);
  // Rank deficient without ridge: a small ridge is added before factoring.
  const Covariance singular = Covariance::class_block({0, 0, 0}, 1.0, 0.0);
  const Matrix ls = singular.cholesky_factor();
  CHECK(max_abs(ls * ls.transpose() - singular.to_dense()) <= 1e-5);
  CHECK(max_abs(Covariance::identity(3, 2.0).scaled(0.5).to_dense() - Matrix::Identity(3, 3)) == 0.0);
}

TEST_CASE("text dump") {
  Matrix a(1, 2);
  a << 1, -2;
  std::ostringstream out;
  write_qp_text(out, make_qp(Vector(Eigen::Vector2d(0.5, 1)), Covariance::identity(2), a, {RowSense::LessEqual},
                             Vector::Constant(1, 3.0)));
  const std::string text = out.str();
  CHECK(text.rfind("qp 2 1", 0) == 0);
  CHECK(text.find("<=") != std::string::npos);
}

}
