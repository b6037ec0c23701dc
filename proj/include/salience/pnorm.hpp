#pragma once

// eps-approximate minimization of ||z||_p over a polyhedron for 1 < p < inf.
//
// We minimize the separable surrogate g(z) = sum_k |z_k|^p, which has the
// same minimizers as the norm. Each iteration takes a projected Newton step
// in the diagonal metric of g's (clamped) Hessian, where the projection is a
// weighted minimum-norm problem handed to solve_qp_l2, followed by Armijo
// backtracking. If the scaled iteration stops making progress we continue
// with identity-metric projected gradient steps.
//
// Termination is certified. Two lower bounds on min g are maintained: the
// linearization g(z) - grad g(z) . (z - s) with s from an exact LP, and the
// Lagrangian dual evaluated at multipliers fitted to grad g(z). We stop once
// ||z||_p minus the best bound (on the norm scale) is below eps / 2. For p very
// close to 1 this may not happen within the iteration limit, in which case the
// status is kIterationLimit and certified_gap reports what was reached.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "salience/lp.hpp"
#include "salience/norms.hpp"
#include "salience/qp.hpp"

namespace salience {

struct PnormOptions {
  int max_iterations = 400;
  /// Scaled iterations allowed before switching to plain projected gradient.
  int max_scaled_iterations = 200;
};

namespace detail {

inline Vector power_gradient(const Vector& z, double p) {
  Vector g(z.size());
  for (Eigen::Index k = 0; k < z.size(); ++k) {
    g[k] = p * std::pow(std::abs(z[k]), p - 1.0) * (z[k] > 0 ? 1.0 : (z[k] < 0 ? -1.0 : 0.0));
  }
  return g;
}

// Lower bound on min_{z in P} g(z) from the linearization at z. The LP is
// boxed to ||s||_inf <= ||z||_p, which contains every point at least as good
// as z, so the bound stays valid on unbounded polyhedra.
inline double linearization_lower_bound(const LinearConstraints& c, const Vector& z, double p,
                                        const Vector& grad, double g_value) {
  if (grad.cwiseAbs().maxCoeff() == 0.0) return g_value;
  LinearProgramSpec lp{grad, c};
  const double radius = lp_norm(z, p);
  for (Eigen::Index k = 0; k < z.size(); ++k) {
    lp.constraints.lower[k] = std::max(lp.constraints.lower[k], -radius);
    lp.constraints.upper[k] = std::min(lp.constraints.upper[k], radius);
  }
  const ProgramSolution s = solve_lp(lp);
  if (!s.optimal()) return 0.0;
  return std::max(0.0, g_value - grad.dot(z - s.z));
}

// Lagrangian lower bound. For multipliers y (free on equalities, >= 0 on
// inequalities written as g . z >= h) the dual function
//   D(y) = y . h + sum_k min_{l_k <= z_k <= u_k} (|z_k|^p - (G^T y)_k z_k)
// bounds the optimum from below, and each inner minimum is a clamped closed
// form. y is fitted to the gradient at z over the near-active rows. The bound
// loses only second order in the multiplier error, unlike the linearization.
inline double dual_lower_bound(const LinearConstraints& c, const Vector& z, double p, const Vector& grad,
                               double active_tol) {
  const int n = static_cast<int>(z.size());
  std::vector<Vector> rows;
  std::vector<double> rhs;
  std::vector<bool> sign_free;
  for (Eigen::Index r = 0; r < c.eq_matrix.rows(); ++r) {
    rows.emplace_back(c.eq_matrix.row(r).transpose());
    rhs.push_back(c.eq_rhs[r]);
    sign_free.push_back(true);
  }
  for (Eigen::Index r = 0; r < c.le_matrix.rows(); ++r) {
    const double slack = c.le_rhs[r] - c.le_matrix.row(r).dot(z);
    if (slack > active_tol * (1.0 + std::abs(c.le_rhs[r]))) continue;
    rows.emplace_back(-c.le_matrix.row(r).transpose());
    rhs.push_back(-c.le_rhs[r]);
    sign_free.push_back(false);
  }
  // Coordinates resting on a bound are absorbed by the inner minimum.
  // Near-zero coordinates are skipped as well: their gradient |z|^(p-1) is
  // far from converged when p is close to 1.
  std::vector<int> fit;
  const double big = 1e-4 * z.cwiseAbs().maxCoeff();
  for (int k = 0; k < n; ++k) {
    const double tol = active_tol * (1.0 + std::abs(z[k]));
    if (z[k] - c.lower[k] > tol && c.upper[k] - z[k] > tol && std::abs(z[k]) > big) fit.push_back(k);
  }
  Vector y = Vector::Zero(static_cast<Eigen::Index>(rows.size()));
  if (!rows.empty() && !fit.empty()) {
    Matrix a(static_cast<Eigen::Index>(fit.size()), y.size());
    Vector target(static_cast<Eigen::Index>(fit.size()));
    for (std::size_t i = 0; i < fit.size(); ++i) {
      for (std::size_t r = 0; r < rows.size(); ++r) a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(r)) = rows[r][fit[i]];
      target[static_cast<Eigen::Index>(i)] = grad[fit[i]];
    }
    y = a.completeOrthogonalDecomposition().solve(target);
  }
  double bound = 0.0;
  Vector price = Vector::Zero(n);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    double yr = y[static_cast<Eigen::Index>(r)];
    if (!sign_free[r]) yr = std::max(0.0, yr);
    bound += yr * rhs[r];
    price += yr * rows[r];
  }
  for (int k = 0; k < n; ++k) {
    const double ck = price[k];
    double zk = (ck > 0 ? 1.0 : -1.0) * std::pow(std::abs(ck) / p, 1.0 / (p - 1.0));
    zk = std::clamp(zk, c.lower[k], c.upper[k]);
    bound += std::pow(std::abs(zk), p) - ck * zk;
  }
  return bound;
}

// Iterates approach their active set slowly, so try several activity
// thresholds; every choice yields a valid bound.
inline double dual_lower_bound(const LinearConstraints& c, const Vector& z, double p, const Vector& grad) {
  double best = -std::numeric_limits<double>::infinity();
  for (double tol : {1e-9, 1e-6, 1e-3}) best = std::max(best, dual_lower_bound(c, z, p, grad, tol));
  return best;
}

}  // namespace detail

/// minimize ||z||_p over `constraints`, 1 < p < inf, to within eps.
inline ProgramSolution solve_pnorm_min(const LinearConstraints& constraints, double p, double eps,
                                       const PnormOptions& options = {}) {
  if (!(p > 1.0) || std::isinf(p)) {
    throw Error(ErrorCode::kInvalidArgument, "solve_pnorm_min needs 1 < p < inf");
  }
  if (!(eps > 0.0)) throw Error(ErrorCode::kInvalidArgument, "eps must be positive");

  // Start from the Euclidean minimizer; it is already optimal for p = 2.
  ProgramSolution out = solve_qp_l2(constraints);
  if (out.status != SolveStatus::kOptimal) return out;
  Vector z = out.z;
  const int n = static_cast<int>(z.size());

  double g = lp_power_sum(z, p);
  double lower = 0.0;
  bool scaled = true;
  int stall = 0;
  int it = 0;
  for (; it < options.max_iterations; ++it) {
    const Vector grad = detail::power_gradient(z, p);
    lower = std::max({lower, detail::linearization_lower_bound(constraints, z, p, grad, g),
                      detail::dual_lower_bound(constraints, z, p, grad)});
    const double norm = std::pow(g, 1.0 / p);
    if (norm - std::pow(lower, 1.0 / p) <= 0.5 * eps) break;
    if (scaled && it >= options.max_scaled_iterations) scaled = false;

    Vector metric = Vector::Ones(n);
    if (scaled) {
      // Diagonal Hessian p(p-1)|z|^(p-2), clamped to a band around its median
      // so zero coordinates neither freeze (p < 2) nor explode (p > 2).
      const double ref = std::max(1e-12, z.cwiseAbs().maxCoeff());
      const double base = p * (p - 1.0) * std::pow(ref, p - 2.0);
      for (int k = 0; k < n; ++k) {
        const double h = p * (p - 1.0) * std::pow(std::max(std::abs(z[k]), 1e-300), p - 2.0);
        metric[k] = std::clamp(h, base * 1e-6, base * 1e6);
      }
    } else {
      metric.setConstant(p * (p - 1.0) * std::pow(std::max(1e-12, z.cwiseAbs().maxCoeff()), p - 2.0));
    }
    const Vector target = z - grad.cwiseQuotient(metric);
    const ProgramSolution proj = project_polyhedron(constraints, target, metric.cwiseSqrt());
    if (proj.status != SolveStatus::kOptimal) {
      scaled = false;
      if (++stall > 3) break;
      continue;
    }
    const Vector direction = proj.z - z;
    const double slope = grad.dot(direction);
    double t = 1.0;
    double next = lp_power_sum(z + direction, p);
    int backtracks = 0;
    while (next > g + 1e-4 * t * slope && backtracks < 50) {
      t *= 0.5;
      next = lp_power_sum(z + t * direction, p);
      ++backtracks;
    }
    if (next >= g) {
      // No decrease along this direction: switch metric, then give up.
      if (!scaled && ++stall > 3) break;
      scaled = false;
      continue;
    }
    stall = 0;
    z += t * direction;
    g = next;
  }

  out.z = z;
  out.iterations = it;
  out.objective_value = lp_norm(z, p);
  out.max_constraint_violation = constraints.max_violation(z);
  out.certified_gap = out.objective_value - std::pow(lower, 1.0 / p);
  out.status = out.certified_gap <= 0.5 * eps && out.max_constraint_violation <= kFeasibilityTolerance
                   ? SolveStatus::kOptimal
                   : SolveStatus::kIterationLimit;
  return out;
}

}  // namespace salience
