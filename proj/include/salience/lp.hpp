#pragma once

// Dense two-phase primal simplex.
//
// Problems are small (tens of variables and rows), so the tableau is kept
// dense. Bland's rule is used for both the entering and the leaving variable,
// which rules out cycling and makes every solve reproducible bit for bit.
// After the final pivot the basic solution is recomputed from the original
// standard-form matrix with a full-pivot LU, which removes the error that
// accumulates in the tableau.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "salience/error.hpp"
#include "salience/norms.hpp"

namespace salience {

/// Primal feasibility tolerance for every solver in this library.
inline constexpr double kFeasibilityTolerance = 1e-8;

/// Linear constraints on z in R^n:
///   eq_matrix z = eq_rhs,  le_matrix z <= le_rhs,  lower <= z <= upper.
/// Bounds may be +-infinity.
struct LinearConstraints {
  Matrix eq_matrix;
  Vector eq_rhs;
  Matrix le_matrix;
  Vector le_rhs;
  Vector lower;
  Vector upper;

  static LinearConstraints free(int n) {
    LinearConstraints c;
    c.eq_matrix.resize(0, n);
    c.eq_rhs.resize(0);
    c.le_matrix.resize(0, n);
    c.le_rhs.resize(0);
    c.lower = Vector::Constant(n, -kInfinity);
    c.upper = Vector::Constant(n, kInfinity);
    return c;
  }

  int num_variables() const { return static_cast<int>(lower.size()); }

  void add_equality(const Vector& row, double rhs) {
    eq_matrix.conservativeResize(eq_matrix.rows() + 1, num_variables());
    eq_matrix.row(eq_matrix.rows() - 1) = row.transpose();
    eq_rhs.conservativeResize(eq_rhs.size() + 1);
    eq_rhs[eq_rhs.size() - 1] = rhs;
  }

  void add_less_equal(const Vector& row, double rhs) {
    le_matrix.conservativeResize(le_matrix.rows() + 1, num_variables());
    le_matrix.row(le_matrix.rows() - 1) = row.transpose();
    le_rhs.conservativeResize(le_rhs.size() + 1);
    le_rhs[le_rhs.size() - 1] = rhs;
  }

  void add_greater_equal(const Vector& row, double rhs) { add_less_equal(-row, -rhs); }

  void validate() const {
    const auto n = lower.size();
    if (upper.size() != n || eq_matrix.cols() != n || le_matrix.cols() != n ||
        eq_matrix.rows() != eq_rhs.size() || le_matrix.rows() != le_rhs.size()) {
      throw Error(ErrorCode::kDimensionMismatch, "inconsistent linear constraint dimensions");
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::isnan(lower[i]) || std::isnan(upper[i]) || lower[i] > upper[i]) {
        throw Error(ErrorCode::kInvalidArgument, "variable bound lo > hi at " + std::to_string(i));
      }
    }
  }

  /// Largest violation of any row or bound at z.
  double max_violation(const Vector& z) const {
    double v = 0.0;
    if (eq_matrix.rows() > 0) v = std::max(v, (eq_matrix * z - eq_rhs).cwiseAbs().maxCoeff());
    if (le_matrix.rows() > 0) v = std::max(v, (le_matrix * z - le_rhs).maxCoeff());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      v = std::max({v, lower[i] - z[i], z[i] - upper[i]});
    }
    return v;
  }
};

/// minimize objective . z subject to constraints.
struct LinearProgramSpec {
  Vector objective;
  LinearConstraints constraints;
};

enum class SolveStatus { kOptimal, kInfeasible, kUnbounded, kIterationLimit };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kInfeasible: return "infeasible";
    case SolveStatus::kUnbounded: return "unbounded";
    case SolveStatus::kIterationLimit: return "iteration_limit";
  }
  return "unknown";
}

struct ProgramSolution {
  SolveStatus status = SolveStatus::kInfeasible;
  Vector z;
  double objective_value = 0.0;
  double max_constraint_violation = 0.0;
  /// Largest KKT residual; filled by the quadratic and p-norm solvers.
  double kkt_residual = 0.0;
  /// Certified optimality gap in objective units; p-norm solver only.
  double certified_gap = 0.0;
  int iterations = 0;

  bool optimal() const { return status == SolveStatus::kOptimal; }
};

namespace detail {

// Standard form: A y = b, y >= 0, with z = offset + T y.
struct StandardForm {
  Matrix a;
  Vector b;
  Vector cost;
  Vector offset;
  Matrix transform;  // n x cols
  std::vector<int> slack_row;  // per column: row it is a slack for, or -1
};

inline StandardForm to_standard_form(const LinearProgramSpec& spec) {
  const auto& c = spec.constraints;
  const int n = c.num_variables();
  StandardForm sf;
  sf.offset = Vector::Zero(n);

  // Column layout: structural columns first, then slacks.
  struct Column {
    int var;
    double sign;
  };
  std::vector<Column> cols;
  std::vector<std::pair<int, double>> bound_rows;  // (column, width) rows y <= width
  for (int i = 0; i < n; ++i) {
    const bool lo = std::isfinite(c.lower[i]);
    const bool hi = std::isfinite(c.upper[i]);
    if (lo) {
      sf.offset[i] = c.lower[i];
      cols.push_back({i, 1.0});
      if (hi) bound_rows.emplace_back(static_cast<int>(cols.size()) - 1, c.upper[i] - c.lower[i]);
    } else if (hi) {
      sf.offset[i] = c.upper[i];
      cols.push_back({i, -1.0});
    } else {
      cols.push_back({i, 1.0});
      cols.push_back({i, -1.0});
    }
  }
  const int structural = static_cast<int>(cols.size());
  const int eq_rows = static_cast<int>(c.eq_matrix.rows());
  const int le_rows = static_cast<int>(c.le_matrix.rows());
  const int b_rows = static_cast<int>(bound_rows.size());
  const int rows = eq_rows + le_rows + b_rows;
  const int total = structural + le_rows + b_rows;

  Matrix t = Matrix::Zero(n, structural);
  for (int j = 0; j < structural; ++j) t(cols[static_cast<std::size_t>(j)].var, j) = cols[static_cast<std::size_t>(j)].sign;

  sf.a = Matrix::Zero(rows, total);
  sf.b = Vector::Zero(rows);
  sf.slack_row.assign(static_cast<std::size_t>(total), -1);
  if (eq_rows > 0) {
    sf.a.block(0, 0, eq_rows, structural) = c.eq_matrix * t;
    sf.b.head(eq_rows) = c.eq_rhs - c.eq_matrix * sf.offset;
  }
  if (le_rows > 0) {
    sf.a.block(eq_rows, 0, le_rows, structural) = c.le_matrix * t;
    sf.b.segment(eq_rows, le_rows) = c.le_rhs - c.le_matrix * sf.offset;
    for (int r = 0; r < le_rows; ++r) {
      sf.a(eq_rows + r, structural + r) = 1.0;
      sf.slack_row[static_cast<std::size_t>(structural + r)] = eq_rows + r;
    }
  }
  for (int r = 0; r < b_rows; ++r) {
    const int row = eq_rows + le_rows + r;
    sf.a(row, bound_rows[static_cast<std::size_t>(r)].first) = 1.0;
    sf.a(row, structural + le_rows + r) = 1.0;
    sf.b[row] = bound_rows[static_cast<std::size_t>(r)].second;
    sf.slack_row[static_cast<std::size_t>(structural + le_rows + r)] = row;
  }
  sf.transform = Matrix::Zero(n, total);
  sf.transform.leftCols(structural) = t;
  sf.cost = Vector::Zero(total);
  sf.cost.head(structural) = t.transpose() * spec.objective;
  return sf;
}

class Tableau {
 public:
  // Rows of `a` must already have b >= 0. `basis[r]` is the initial basic
  // column of row r; columns >= first_artificial are artificial.
  Tableau(Matrix a, Vector b, std::vector<int> basis, int first_artificial)
      : t_(a.rows() + 1, a.cols() + 1), basis_(std::move(basis)), first_artificial_(first_artificial) {
    rows_ = static_cast<int>(a.rows());
    cols_ = static_cast<int>(a.cols());
    t_.topLeftCorner(rows_, cols_) = a;
    t_.block(0, cols_, rows_, 1) = b;
    t_.row(rows_).setZero();
  }

  // Objective row holds reduced costs for minimizing cost . y.
  void set_objective(const Vector& cost) {
    t_.row(rows_).setZero();
    t_.block(rows_, 0, 1, cost.size()) = cost.transpose();
    for (int r = 0; r < rows_; ++r) {
      const double cb = basic_cost(cost, basis_[static_cast<std::size_t>(r)]);
      if (cb != 0.0) t_.row(rows_) -= cb * t_.row(r);
    }
  }

  enum class Result { kOptimal, kUnbounded, kIterationLimit };

  // Bland's rule. Columns with allow[col] == false never enter.
  Result run(const std::vector<bool>& allow, int max_iterations, int& iterations) {
    constexpr double kPivotTol = 1e-11;
    while (iterations < max_iterations) {
      int enter = -1;
      for (int col = 0; col < cols_; ++col) {
        if (allow[static_cast<std::size_t>(col)] && t_(rows_, col) < -kPivotTol) {
          enter = col;
          break;
        }
      }
      if (enter < 0) return Result::kOptimal;
      int leave = -1;
      double best_ratio = kInfinity;
      for (int r = 0; r < rows_; ++r) {
        const double coef = t_(r, enter);
        if (coef <= kPivotTol) continue;
        const double ratio = t_(r, cols_) / coef;
        const bool better = ratio < best_ratio - 1e-12;
        const bool tie = !better && ratio <= best_ratio + 1e-12;
        if (leave < 0 || better ||
            (tie && basis_[static_cast<std::size_t>(r)] < basis_[static_cast<std::size_t>(leave)])) {
          leave = r;
        }
        best_ratio = std::min(best_ratio, ratio);
      }
      if (leave < 0) return Result::kUnbounded;
      pivot(leave, enter);
      ++iterations;
    }
    return Result::kIterationLimit;
  }

  void pivot(int row, int col) {
    t_.row(row) /= t_(row, col);
    for (int r = 0; r <= rows_; ++r) {
      if (r != row) {
        const double f = t_(r, col);
        if (f != 0.0) t_.row(r) -= f * t_.row(row);
      }
    }
    basis_[static_cast<std::size_t>(row)] = col;
  }

  // Pivots artificial variables out of the basis after phase one; rows where
  // that is impossible are linearly dependent and get dropped.
  void expel_artificials() {
    for (int r = 0; r < rows_; ++r) {
      if (basis_[static_cast<std::size_t>(r)] < first_artificial_) continue;
      int col = -1;
      double best = 1e-9;
      for (int c = 0; c < first_artificial_; ++c) {
        if (std::abs(t_(r, c)) > best) {
          best = std::abs(t_(r, c));
          col = c;
        }
      }
      if (col >= 0) {
        pivot(r, col);
      } else {
        drop_row(r);
        --r;
      }
    }
  }

  double objective_value() const { return -t_(rows_, cols_); }
  const std::vector<int>& basis() const { return basis_; }
  const std::vector<int>& kept_rows() const { return kept_rows_; }
  void init_kept_rows() {
    kept_rows_.resize(static_cast<std::size_t>(rows_));
    for (int r = 0; r < rows_; ++r) kept_rows_[static_cast<std::size_t>(r)] = r;
  }

 private:
  double basic_cost(const Vector& cost, int col) const {
    return col < cost.size() ? cost[col] : 0.0;
  }

  void drop_row(int r) {
    Matrix next(t_.rows() - 1, t_.cols());
    next.topRows(r) = t_.topRows(r);
    next.bottomRows(t_.rows() - 1 - r) = t_.bottomRows(t_.rows() - 1 - r);
    t_ = std::move(next);
    basis_.erase(basis_.begin() + r);
    kept_rows_.erase(kept_rows_.begin() + r);
    --rows_;
  }

  Matrix t_;
  std::vector<int> basis_;
  std::vector<int> kept_rows_;
  int rows_ = 0;
  int cols_ = 0;
  int first_artificial_ = 0;
};

}  // namespace detail

inline ProgramSolution solve_lp(const LinearProgramSpec& spec) {
  spec.constraints.validate();
  const int n = spec.constraints.num_variables();
  if (spec.objective.size() != n) {
    throw Error(ErrorCode::kDimensionMismatch, "objective length differs from variable count");
  }

  detail::StandardForm sf = detail::to_standard_form(spec);
  const int rows = static_cast<int>(sf.a.rows());
  const int total = static_cast<int>(sf.a.cols());

  // Orient rows so b >= 0, then seed the basis with slacks where they have a
  // +1 entry and artificials elsewhere.
  Matrix a = sf.a;
  Vector b = sf.b;
  for (int r = 0; r < rows; ++r) {
    if (b[r] < 0.0) {
      a.row(r) *= -1.0;
      b[r] = -b[r];
    }
  }
  std::vector<int> basis(static_cast<std::size_t>(rows), -1);
  for (int col = 0; col < total; ++col) {
    const int r = sf.slack_row[static_cast<std::size_t>(col)];
    if (r >= 0 && a(r, col) > 0.0) basis[static_cast<std::size_t>(r)] = col;
  }
  int artificials = 0;
  for (int r = 0; r < rows; ++r) {
    if (basis[static_cast<std::size_t>(r)] < 0) ++artificials;
  }
  Matrix full = Matrix::Zero(rows, total + artificials);
  full.leftCols(total) = a;
  {
    int next = total;
    for (int r = 0; r < rows; ++r) {
      if (basis[static_cast<std::size_t>(r)] < 0) {
        full(r, next) = 1.0;
        basis[static_cast<std::size_t>(r)] = next++;
      }
    }
  }

  ProgramSolution out;
  detail::Tableau tab(full, b, basis, total);
  tab.init_kept_rows();
  const int max_iterations = 50 * (rows + total + artificials) + 1000;
  int iterations = 0;

  if (artificials > 0) {
    Vector phase1 = Vector::Zero(total + artificials);
    phase1.tail(artificials).setOnes();
    tab.set_objective(phase1);
    std::vector<bool> allow(static_cast<std::size_t>(total + artificials), true);
    const auto r1 = tab.run(allow, max_iterations, iterations);
    if (r1 == detail::Tableau::Result::kIterationLimit) {
      out.status = SolveStatus::kIterationLimit;
      out.iterations = iterations;
      return out;
    }
    const double scale = 1.0 + b.cwiseAbs().maxCoeff();
    if (tab.objective_value() > 1e-9 * scale) {
      out.status = SolveStatus::kInfeasible;
      out.iterations = iterations;
      return out;
    }
    tab.expel_artificials();
  }

  Vector cost = Vector::Zero(total + artificials);
  cost.head(total) = sf.cost;
  tab.set_objective(cost);
  std::vector<bool> allow(static_cast<std::size_t>(total + artificials), false);
  for (int col = 0; col < total; ++col) allow[static_cast<std::size_t>(col)] = true;
  const auto r2 = tab.run(allow, max_iterations, iterations);
  out.iterations = iterations;
  if (r2 == detail::Tableau::Result::kUnbounded) {
    out.status = SolveStatus::kUnbounded;
    return out;
  }
  if (r2 == detail::Tableau::Result::kIterationLimit) {
    out.status = SolveStatus::kIterationLimit;
    return out;
  }

  // Recompute the basic solution from the untouched standard form.
  const auto& kept = tab.kept_rows();
  const auto& final_basis = tab.basis();
  const int k = static_cast<int>(kept.size());
  Vector y = Vector::Zero(total);
  if (k > 0) {
    Matrix basis_matrix(k, k);
    Vector rhs(k);
    for (int r = 0; r < k; ++r) {
      rhs[r] = sf.b[kept[static_cast<std::size_t>(r)]];
      for (int c = 0; c < k; ++c) {
        basis_matrix(r, c) = sf.a(kept[static_cast<std::size_t>(r)], final_basis[static_cast<std::size_t>(c)]);
      }
    }
    const Vector yb = basis_matrix.fullPivLu().solve(rhs);
    for (int c = 0; c < k; ++c) y[final_basis[static_cast<std::size_t>(c)]] = std::max(0.0, yb[c]);
  }
  out.status = SolveStatus::kOptimal;
  out.z = sf.offset + sf.transform * y;
  // Bounds hold exactly by construction of the substitution; snap rounding.
  for (int i = 0; i < n; ++i) {
    out.z[i] = std::clamp(out.z[i], spec.constraints.lower[i], spec.constraints.upper[i]);
  }
  out.objective_value = spec.objective.dot(out.z);
  out.max_constraint_violation = spec.constraints.max_violation(out.z);
  return out;
}

/// Any point of the polyhedron, or an infeasible verdict.
inline ProgramSolution find_feasible_point(const LinearConstraints& constraints) {
  return solve_lp({Vector::Zero(constraints.num_variables()), constraints});
}

}  // namespace salience
