#pragma once

// Unanimity and assignment programs over the perturbation x.
//
// With 0 <= w_k + x_k <= 1 the condition ||w + x||_1 = 1 is the linear
// equality sum_k (w_k + x_k) = 1, so every program below has a polyhedral
// feasible set and only the budget objective depends on p:
//   p = 1    split x = x+ - x- via u >= |x|, minimize sum u   (LP)
//   p = inf  bound variable t >= |x_k|, minimize t           (LP)
//   p = 2    minimum Euclidean norm                           (QP)
//   else     eps-certified p-norm minimization
//
// Vote constraints are rows <w + x, a> >= margin.

#include <algorithm>
#include <cmath>
#include <vector>

#include "salience/election.hpp"
#include "salience/lp.hpp"
#include "salience/pnorm.hpp"
#include "salience/qp.hpp"

namespace salience {

/// Required margin against candidates earlier in tie order.
inline constexpr double kStrictMargin = 1e-7;
/// Default approximation slack for budgets with p outside {1, 2, inf}.
inline constexpr double kDefaultEps = 1e-6;

struct UnanimityResult {
  bool feasible = false;
  Vector x;
  double norm_value = 0.0;
  /// Feasible only because ||x||_p landed in (B, B + eps].
  bool used_eps_slack = false;
  SolveStatus status = SolveStatus::kInfeasible;
};

/// One vote constraint <w + x, a> >= margin.
struct VoteRow {
  Vector a;
  double margin = 0.0;
};

namespace detail {

// The simplex rows sum x = 1 - sum w and -w <= x <= 1 - w, plus vote rows.
inline LinearConstraints perturbation_polyhedron(const Vector& w, const std::vector<VoteRow>& rows) {
  const int ell = static_cast<int>(w.size());
  LinearConstraints c = LinearConstraints::free(ell);
  c.lower = -w;
  c.upper = Vector::Ones(ell) - w;
  c.add_equality(Vector::Ones(ell), 1.0 - w.sum());
  for (const VoteRow& r : rows) {
    // Rows with a = 0 read 0 >= margin; keep them only when that fails.
    if (r.a.cwiseAbs().maxCoeff() == 0.0 && r.margin <= 0.0) continue;
    c.add_greater_equal(r.a, r.margin - w.dot(r.a));
  }
  return c;
}

// Pads constraints on x with extra trailing variables that start free.
inline LinearConstraints widen(const LinearConstraints& c, int extra) {
  const int n = c.num_variables();
  LinearConstraints out = LinearConstraints::free(n + extra);
  out.lower.head(n) = c.lower;
  out.upper.head(n) = c.upper;
  out.eq_matrix = Matrix::Zero(c.eq_matrix.rows(), n + extra);
  out.eq_matrix.leftCols(n) = c.eq_matrix;
  out.eq_rhs = c.eq_rhs;
  out.le_matrix = Matrix::Zero(c.le_matrix.rows(), n + extra);
  out.le_matrix.leftCols(n) = c.le_matrix;
  out.le_rhs = c.le_rhs;
  return out;
}

inline ProgramSolution minimize_norm(const LinearConstraints& c, double p, double eps) {
  const int ell = c.num_variables();
  if (p == 1.0) {
    LinearConstraints lp = widen(c, ell);
    for (int k = 0; k < ell; ++k) {
      Vector row = Vector::Zero(2 * ell);
      row[k] = 1.0;
      row[ell + k] = -1.0;
      lp.add_less_equal(row, 0.0);
      row[k] = -1.0;
      lp.add_less_equal(row, 0.0);
    }
    Vector obj = Vector::Zero(2 * ell);
    obj.tail(ell).setOnes();
    ProgramSolution s = solve_lp({obj, lp});
    if (s.z.size() == 2 * ell) s.z = Vector(s.z.head(ell));
    return s;
  }
  if (is_infinite_norm(p)) {
    LinearConstraints lp = widen(c, 1);
    for (int k = 0; k < ell; ++k) {
      Vector row = Vector::Zero(ell + 1);
      row[k] = 1.0;
      row[ell] = -1.0;
      lp.add_less_equal(row, 0.0);
      row[k] = -1.0;
      lp.add_less_equal(row, 0.0);
    }
    ProgramSolution s = solve_lp({Vector::Unit(ell + 1, ell), lp});
    if (s.z.size() == ell + 1) s.z = Vector(s.z.head(ell));
    return s;
  }
  if (p == 2.0) return solve_qp_l2(c);
  return solve_pnorm_min(c, p, eps);
}

// Snaps w + x back onto the simplex to remove solver round-off.
inline Vector clean_perturbation(const Vector& w, const Vector& x) {
  Vector wp = (w + x).cwiseMax(0.0).cwiseMin(1.0);
  const double s = wp.sum();
  if (s > 0.0) wp /= s;
  return wp - w;
}

}  // namespace detail

/// Minimal-norm (budget) or any (box) perturbation satisfying every row.
inline UnanimityResult solve_vote_rows(const Vector& w, const std::vector<VoteRow>& rows,
                                       const AttackConstraint& constraint, double eps = kDefaultEps) {
  validate_constraint(constraint, static_cast<int>(w.size()));
  LinearConstraints c = detail::perturbation_polyhedron(w, rows);
  UnanimityResult out;

  if (const auto* nb = std::get_if<NormBudget>(&constraint)) {
    const ProgramSolution s = detail::minimize_norm(c, nb->p_norm, eps);
    out.status = s.status;
    if (s.status != SolveStatus::kOptimal) return out;
    out.x = detail::clean_perturbation(w, s.z);
    out.norm_value = lp_norm(out.x, nb->p_norm);
    const bool exact_route = nb->p_norm == 1.0 || nb->p_norm == 2.0 || is_infinite_norm(nb->p_norm);
    const double round_off = 1e-12 * (1.0 + nb->budget);
    if (out.norm_value <= nb->budget + round_off) {
      out.feasible = true;
    } else if (!exact_route && out.norm_value <= nb->budget + eps) {
      out.feasible = true;
      out.used_eps_slack = true;
    }
    return out;
  }

  const auto& box = std::get<IntervalBox>(constraint);
  for (Eigen::Index k = 0; k < w.size(); ++k) {
    const auto [lo, hi] = box.intervals[static_cast<std::size_t>(k)];
    c.lower[k] = std::max(c.lower[k], lo - w[k]);
    c.upper[k] = std::min(c.upper[k], hi - w[k]);
  }
  const ProgramSolution s = find_feasible_point(c);
  out.status = s.status;
  if (s.status != SolveStatus::kOptimal) return out;
  out.feasible = true;
  out.x = s.z;
  out.norm_value = lp_norm(out.x, 2.0);
  return out;
}

/// Rows requiring every voter in `demographic` to vote for candidate 0.
inline std::vector<VoteRow> unanimity_rows(const PreferenceTensor& tensor, const std::vector<int>& demographic) {
  std::vector<VoteRow> rows;
  for (int j : demographic) {
    for (int i = 1; i < tensor.num_candidates(); ++i) rows.push_back({tensor.preference(j, i), 0.0});
  }
  return rows;
}

/// Minimal-norm x under which every voter in D prefers candidate 0.
inline UnanimityResult unanimity_budget(const ElectionInstance& inst, const PreferenceTensor& tensor,
                                        const std::vector<int>& demographic, const NormBudget& budget,
                                        double eps = kDefaultEps) {
  return solve_vote_rows(inst.weights(), unanimity_rows(tensor, demographic), budget, eps);
}

/// Any x with w + x in the box under which every voter in D prefers
/// candidate 0.
inline UnanimityResult unanimity_interval(const ElectionInstance& inst, const PreferenceTensor& tensor,
                                          const std::vector<int>& demographic, const IntervalBox& box) {
  return solve_vote_rows(inst.weights(), unanimity_rows(tensor, demographic), box);
}

/// Rows making voter j choose assignment[j]: weakly ahead of later
/// candidates, strictly ahead of earlier ones.
inline std::vector<VoteRow> assignment_rows(const PreferenceTensor& tensor, const std::vector<int>& assignment) {
  if (static_cast<int>(assignment.size()) != tensor.num_voters()) {
    throw Error(ErrorCode::kInvalidArgument, "assignment must name a candidate for every voter");
  }
  std::vector<VoteRow> rows;
  const int m = tensor.num_candidates();
  for (int j = 0; j < tensor.num_voters(); ++j) {
    const int ip = assignment[static_cast<std::size_t>(j)];
    if (ip < 0 || ip >= m) {
      throw Error(ErrorCode::kInvalidArgument, "voter " + std::to_string(j) + " has no valid candidate");
    }
    for (int i = 0; i < m; ++i) {
      if (i == ip) continue;
      rows.push_back({tensor.preference(j, ip, i), i < ip ? kStrictMargin : 0.0});
    }
  }
  return rows;
}

inline UnanimityResult assignment_feasibility(const ElectionInstance& inst, const PreferenceTensor& tensor,
                                              const std::vector<int>& assignment,
                                              const AttackConstraint& constraint, double eps = kDefaultEps) {
  return solve_vote_rows(inst.weights(), assignment_rows(tensor, assignment), constraint, eps);
}

}  // namespace salience
