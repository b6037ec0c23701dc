#include "salience/qp.hpp"

#include <random>

#include <gtest/gtest.h>

namespace salience {
namespace {

TEST(SolveQpL2, Hyperplane) {
  LinearConstraints c = LinearConstraints::free(2);
  c.add_equality(Vector::Ones(2), 2.0);
  const ProgramSolution s = solve_qp_l2(c);
  ASSERT_EQ(s.status, SolveStatus::kOptimal);
  EXPECT_NEAR(s.z[0], 1.0, 1e-9);
  EXPECT_NEAR(s.z[1], 1.0, 1e-9);
  EXPECT_LE(s.kkt_residual, kKktTolerance);
}

TEST(SolveQpL2, Bounds) {
  LinearConstraints c = LinearConstraints::free(2);
  c.lower << 1.0, 0.0;
  const ProgramSolution s = solve_qp_l2(c);
  ASSERT_EQ(s.status, SolveStatus::kOptimal);
  EXPECT_NEAR(s.z[0], 1.0, 1e-9);
  EXPECT_NEAR(s.z[1], 0.0, 1e-9);
}

TEST(SolveQpL2, Infeasible) {
  LinearConstraints c = LinearConstraints::free(2);
  c.add_greater_equal(Vector::Ones(2), 1.0);
  c.add_less_equal(Vector::Ones(2), 0.0);
  EXPECT_EQ(solve_qp_l2(c).status, SolveStatus::kInfeasible);
  LinearConstraints crossed = LinearConstraints::free(1);
  crossed.lower[0] = 1.0;
  crossed.upper[0] = 0.0;
  EXPECT_THROW(solve_qp_l2(crossed), Error);
}

TEST(ProjectPolyhedron, WeightedMetric) {
  LinearConstraints c = LinearConstraints::free(2);
  c.add_equality(Vector::Ones(2), 0.0);
  Vector point(2), scale(2);
  point << 1.0, 1.0;
  scale << 1.0, 2.0;
  // min (z0-1)^2 + 4 (z1-1)^2 with z0 + z1 = 0: z0 = -0.6, z1 = 0.6.
  const ProgramSolution s = project_polyhedron(c, point, scale);
  ASSERT_EQ(s.status, SolveStatus::kOptimal);
  EXPECT_NEAR(s.z[0], -0.6, 1e-9);
  EXPECT_NEAR(s.z[1], 0.6, 1e-9);
}

// Oracle: try every subset of inequality rows as active, solve the
// equality-constrained minimum-norm problem, keep feasible candidates.
double active_set_oracle(const Matrix& g, const Vector& h, const Matrix& e, const Vector& f) {
  const Eigen::Index rows = g.rows();
  double best = std::numeric_limits<double>::infinity();
  for (unsigned mask = 0; mask < (1u << rows); ++mask) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index r = 0; r < rows; ++r)
      if (mask & (1u << r)) idx.push_back(r);
    Matrix a(e.rows() + static_cast<Eigen::Index>(idx.size()), g.cols());
    Vector b(a.rows());
    a.topRows(e.rows()) = e;
    b.head(e.rows()) = f;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      a.row(e.rows() + static_cast<Eigen::Index>(i)) = g.row(idx[i]);
      b[e.rows() + static_cast<Eigen::Index>(i)] = h[idx[i]];
    }
    const Vector z = a.completeOrthogonalDecomposition().solve(b);
    if ((a * z - b).norm() > 1e-9) continue;
    if (((g * z - h).array() >= -1e-9).all()) best = std::min(best, z.norm());
  }
  return best;
}

TEST(SolveQpL2, MatchesActiveSetEnumeration) {
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 120; ++trial) {
    const int n = 2 + trial % 3;
    const int rows = 2 + trial % 5;
    Matrix g(rows, n);
    Vector h(rows);
    for (int r = 0; r < rows; ++r) {
      for (int k = 0; k < n; ++k) g(r, k) = u(rng);
      h[r] = u(rng);
    }
    Matrix e(trial % 2, n);
    Vector f(trial % 2);
    if (e.rows() > 0) {
      e.row(0) = Vector::Ones(n).transpose();
      f[0] = u(rng);
    }
    LinearConstraints c = LinearConstraints::free(n);
    for (int r = 0; r < rows; ++r) c.add_greater_equal(g.row(r).transpose(), h[r]);
    if (e.rows() > 0) c.add_equality(e.row(0).transpose(), f[0]);
    const double expected = active_set_oracle(g, h, e, f);
    const ProgramSolution s = solve_qp_l2(c);
    if (std::isinf(expected)) {
      EXPECT_EQ(s.status, SolveStatus::kInfeasible) << trial;
    } else {
      ASSERT_EQ(s.status, SolveStatus::kOptimal) << trial;
      EXPECT_NEAR(s.objective_value, expected, 1e-7) << trial;
      EXPECT_LE(s.kkt_residual, kKktTolerance);
    }
  }
}

}  // namespace
}  // namespace salience
