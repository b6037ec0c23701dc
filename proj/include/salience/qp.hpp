#pragma once

// Minimum Euclidean norm over a polyhedron by a primal active-set method.
//
// The objective 1/2 ||z||^2 has identity Hessian, so the equality-constrained
// subproblem on a working set W is solved in closed form: the minimum-norm
// solution of A_W z = b_W. The working set is seeded with the constraints
// active at an LP vertex and kept linearly independent.

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "salience/lp.hpp"

namespace salience {

/// Required KKT residual of a returned quadratic-program optimum.
inline constexpr double kKktTolerance = 1e-6;

namespace detail {

// All constraints as rows g . z >= h; equalities are flagged.
struct RowSet {
  Matrix g;
  Vector h;
  std::vector<bool> equality;
};

inline RowSet collect_rows(const LinearConstraints& c) {
  const int n = c.num_variables();
  std::vector<Vector> rows;
  std::vector<double> rhs;
  std::vector<bool> eq;
  for (Eigen::Index r = 0; r < c.eq_matrix.rows(); ++r) {
    rows.emplace_back(c.eq_matrix.row(r).transpose());
    rhs.push_back(c.eq_rhs[r]);
    eq.push_back(true);
  }
  for (Eigen::Index r = 0; r < c.le_matrix.rows(); ++r) {
    rows.emplace_back(-c.le_matrix.row(r).transpose());
    rhs.push_back(-c.le_rhs[r]);
    eq.push_back(false);
  }
  for (int i = 0; i < n; ++i) {
    if (std::isfinite(c.lower[i])) {
      rows.emplace_back(Vector::Unit(n, i));
      rhs.push_back(c.lower[i]);
      eq.push_back(false);
    }
    if (std::isfinite(c.upper[i])) {
      rows.emplace_back(-Vector::Unit(n, i));
      rhs.push_back(-c.upper[i]);
      eq.push_back(false);
    }
  }
  RowSet out;
  out.g.resize(static_cast<Eigen::Index>(rows.size()), n);
  out.h.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.g.row(static_cast<Eigen::Index>(r)) = rows[r].transpose();
    out.h[static_cast<Eigen::Index>(r)] = rhs[r];
  }
  out.equality = std::move(eq);
  return out;
}

inline Matrix stack_rows(const RowSet& rows, const std::vector<int>& idx) {
  Matrix a(static_cast<Eigen::Index>(idx.size()), rows.g.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) a.row(static_cast<Eigen::Index>(r)) = rows.g.row(idx[r]);
  return a;
}

inline bool independent_of(const Matrix& a, const Vector& row) {
  if (a.rows() == 0) return row.norm() > 1e-12;
  // Residual of projecting `row` onto the row space of a.
  const Vector coef = a.transpose().colPivHouseholderQr().solve(row);
  return (a.transpose() * coef - row).norm() > 1e-9 * std::max(1.0, row.norm());
}

}  // namespace detail

/// minimize ||z||_2 subject to `constraints`.
inline ProgramSolution solve_qp_l2(const LinearConstraints& constraints) {
  constraints.validate();
  const int n = constraints.num_variables();
  ProgramSolution out;

  const ProgramSolution start = find_feasible_point(constraints);
  if (start.status != SolveStatus::kOptimal) {
    out.status = start.status == SolveStatus::kUnbounded ? SolveStatus::kIterationLimit : start.status;
    return out;
  }

  const detail::RowSet rows = detail::collect_rows(constraints);
  const int total = static_cast<int>(rows.h.size());
  Vector z = start.z;

  // Seed: equalities first, then inequalities active at the vertex.
  std::vector<int> working;
  {
    Matrix current(0, n);
    auto try_add = [&](int r) {
      if (detail::independent_of(current, rows.g.row(r).transpose())) {
        working.push_back(r);
        current = detail::stack_rows(rows, working);
      }
    };
    for (int r = 0; r < total; ++r) {
      if (rows.equality[static_cast<std::size_t>(r)]) try_add(r);
    }
    for (int r = 0; r < total; ++r) {
      if (!rows.equality[static_cast<std::size_t>(r)] &&
          std::abs(rows.g.row(r).dot(z) - rows.h[r]) <= 1e-9 * (1.0 + std::abs(rows.h[r]))) {
        try_add(r);
      }
    }
  }

  const int max_iterations = 20 * (total + n) + 200;
  Vector lambda_w;
  int it = 0;
  for (; it < max_iterations; ++it) {
    const Matrix a = detail::stack_rows(rows, working);
    Vector target = Vector::Zero(n);
    Vector bw(static_cast<Eigen::Index>(working.size()));
    for (std::size_t r = 0; r < working.size(); ++r) bw[static_cast<Eigen::Index>(r)] = rows.h[working[r]];
    if (!working.empty()) target = a.completeOrthogonalDecomposition().solve(bw);

    const Vector step = target - z;
    if (step.norm() <= 1e-12 * (1.0 + z.norm())) {
      // Stationary on the working set: z = A_W^T lambda.
      lambda_w = working.empty() ? Vector() : Vector(a.transpose().colPivHouseholderQr().solve(target));
      int drop = -1;
      double most_negative = -1e-12;
      for (std::size_t r = 0; r < working.size(); ++r) {
        if (rows.equality[static_cast<std::size_t>(working[r])]) continue;
        if (lambda_w[static_cast<Eigen::Index>(r)] < most_negative) {
          most_negative = lambda_w[static_cast<Eigen::Index>(r)];
          drop = static_cast<int>(r);
        }
      }
      if (drop < 0) break;
      working.erase(working.begin() + drop);
      continue;
    }

    // Longest feasible fraction of the step; lowest blocking index wins ties.
    double alpha = 1.0;
    int blocking = -1;
    for (int r = 0; r < total; ++r) {
      if (std::find(working.begin(), working.end(), r) != working.end()) continue;
      const double gp = rows.g.row(r).dot(step);
      if (gp < -1e-14) {
        const double ratio = std::max(0.0, (rows.h[r] - rows.g.row(r).dot(z)) / gp);
        if (ratio < alpha) {
          alpha = ratio;
          blocking = r;
        }
      }
    }
    z += alpha * step;
    if (blocking >= 0) working.push_back(blocking);
  }

  out.iterations = it;
  if (it >= max_iterations) {
    out.status = SolveStatus::kIterationLimit;
    out.z = z;
    return out;
  }

  // KKT residual: stationarity, dual sign, complementarity, primal feasibility.
  Vector lambda_full = Vector::Zero(total);
  for (std::size_t r = 0; r < working.size() && r < static_cast<std::size_t>(lambda_w.size()); ++r) {
    lambda_full[working[r]] = lambda_w[static_cast<Eigen::Index>(r)];
  }
  double kkt = (z - rows.g.transpose() * lambda_full).cwiseAbs().maxCoeff();
  for (int r = 0; r < total; ++r) {
    const double slack = rows.g.row(r).dot(z) - rows.h[r];
    if (!rows.equality[static_cast<std::size_t>(r)]) {
      kkt = std::max({kkt, -lambda_full[r], std::abs(lambda_full[r] * slack)});
    }
  }
  out.status = SolveStatus::kOptimal;
  out.z = z;
  out.objective_value = z.norm();
  out.max_constraint_violation = constraints.max_violation(z);
  out.kkt_residual = std::max(kkt, out.max_constraint_violation);
  if (out.max_constraint_violation > kFeasibilityTolerance || kkt > kKktTolerance) {
    out.status = SolveStatus::kIterationLimit;
  }
  return out;
}

/// Constraints on u for the substitution z = center + diag(1 / scale) u.
inline LinearConstraints rescale_constraints(const LinearConstraints& c, const Vector& center,
                                             const Vector& scale) {
  LinearConstraints out = c;
  const Vector inv = scale.cwiseInverse();
  if (c.eq_matrix.rows() > 0) {
    out.eq_matrix = c.eq_matrix * inv.asDiagonal();
    out.eq_rhs = c.eq_rhs - c.eq_matrix * center;
  }
  if (c.le_matrix.rows() > 0) {
    out.le_matrix = c.le_matrix * inv.asDiagonal();
    out.le_rhs = c.le_rhs - c.le_matrix * center;
  }
  out.lower = (c.lower - center).cwiseProduct(scale);
  out.upper = (c.upper - center).cwiseProduct(scale);
  return out;
}

/// argmin_z sum_k scale_k^2 (z_k - point_k)^2 over the polyhedron: the
/// projection of `point` in the diagonal metric diag(scale^2).
inline ProgramSolution project_polyhedron(const LinearConstraints& c, const Vector& point,
                                          const Vector& scale) {
  ProgramSolution s = solve_qp_l2(rescale_constraints(c, point, scale));
  if (s.z.size() == point.size()) {
    s.z = point + s.z.cwiseQuotient(scale);
    s.max_constraint_violation = c.max_violation(s.z);
  }
  return s;
}

inline ProgramSolution project_polyhedron(const LinearConstraints& c, const Vector& point) {
  return project_polyhedron(c, point, Vector::Ones(point.size()));
}

}  // namespace salience
