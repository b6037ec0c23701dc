#pragma once

// Brute-force baselines. They share only the election model with the
// solvers: no LP, no enumeration of demographics, no analytic formulas.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "salience/election.hpp"
#include "salience/norms.hpp"

namespace salience {

struct MaxSupportObjective {};
/// 1 if candidate 0 wins the plurality vote, else 0.
struct MajorityObjective {};
struct ExpectedVotesObjective {
  StochasticModel model;
};
using Objective = std::variant<MaxSupportObjective, MajorityObjective, ExpectedVotesObjective>;

inline double evaluate_objective(const PreferenceTensor& tensor, const Vector& w_prime, const Objective& objective) {
  if (std::holds_alternative<MaxSupportObjective>(objective)) {
    return deterministic_tally(tensor, w_prime).votes[0];
  }
  if (std::holds_alternative<MajorityObjective>(objective)) {
    return plurality_outcome(deterministic_tally(tensor, w_prime)) == 0 ? 1.0 : 0.0;
  }
  return expected_votes(tensor, w_prime, std::get<ExpectedVotesObjective>(objective).model).value;
}

/// Whether w' = w + x satisfies the attack constraint.
inline bool admissible(const AttackConstraint& constraint, const Vector& w, const Vector& w_prime) {
  if (const auto* nb = std::get_if<NormBudget>(&constraint)) {
    if (nb->unbounded()) return true;
    return lp_norm(w_prime - w, nb->p_norm) <= nb->budget * (1.0 + 1e-12) + 1e-12;
  }
  const auto& box = std::get<IntervalBox>(constraint);
  for (Eigen::Index k = 0; k < w.size(); ++k) {
    const auto [lo, hi] = box.intervals[static_cast<std::size_t>(k)];
    if (w_prime[k] < lo - 1e-12 || w_prime[k] > hi + 1e-12) return false;
  }
  return true;
}

struct OracleResult {
  bool found = false;  // some admissible point was scanned
  Vector w_prime;
  Vector x;
  double value = -kInfinity;
  std::uint64_t points = 0;
};

inline constexpr std::uint64_t kDefaultGridCap = 50'000'000;

/// Number of compositions of `total` into `parts` nonnegative parts.
inline double composition_count(int total, int parts) {
  double c = 1.0;
  for (int i = 1; i < parts; ++i) c = c * (total + i) / i;
  return c;
}

/// Visits every w' = c / N with c a composition of N into ell parts, in
/// lexicographic order of c.
inline void for_each_grid_point(int divisions, int ell, const std::function<void(const Vector&)>& visit) {
  std::vector<int> c(static_cast<std::size_t>(ell), 0);
  Vector w(ell);
  std::function<void(int, int)> rec = [&](int k, int remaining) {
    if (k == ell - 1) {
      c[static_cast<std::size_t>(k)] = remaining;
      for (int i = 0; i < ell; ++i) w[i] = static_cast<double>(c[static_cast<std::size_t>(i)]) / divisions;
      visit(w);
      return;
    }
    for (int v = 0; v <= remaining; ++v) {
      c[static_cast<std::size_t>(k)] = v;
      rec(k + 1, remaining - v);
    }
  };
  rec(0, divisions);
}

/// Scans the exact simplex grid of step `resolution` (rounded to 1/N) and
/// returns the first best admissible point in scan order.
inline OracleResult grid_search(const ElectionInstance& inst, const AttackConstraint& constraint,
                                const Objective& objective, double resolution,
                                std::uint64_t cap = kDefaultGridCap) {
  validate_constraint(constraint, inst.num_issues());
  if (!(resolution > 0.0) || resolution > 1.0) throw Error(ErrorCode::kInvalidArgument, "resolution must be in (0, 1]");
  const int divisions = static_cast<int>(std::lround(1.0 / resolution));
  if (composition_count(divisions, inst.num_issues()) > static_cast<double>(cap)) {
    throw Error(ErrorCode::kEnumerationCapExceeded, "simplex grid exceeds the enumeration cap");
  }
  const PreferenceTensor tensor(inst);
  const Vector& w = inst.weights();
  OracleResult best;
  for_each_grid_point(divisions, inst.num_issues(), [&](const Vector& wp) {
    ++best.points;
    if (!admissible(constraint, w, wp)) return;
    const double v = evaluate_objective(tensor, wp, objective);
    if (!best.found || v > best.value) {
      best.found = true;
      best.value = v;
      best.w_prime = wp;
    }
  });
  if (best.found) best.x = best.w_prime - w;
  return best;
}

struct StructuredSearchOptions {
  /// Coordinates that are enumerated; empty means all.
  std::vector<int> free_coordinates;
  /// Coordinates held at 1 before normalization.
  std::vector<int> fixed_on;
  /// Optional admissibility filter on w'.
  std::optional<AttackConstraint> constraint;
};

/// Enumerates nonzero 0/1 patterns over the free coordinates, normalizes each
/// to the simplex, and returns the first best pattern in increasing mask order.
inline OracleResult structured_weight_search(const ElectionInstance& inst, const Objective& objective,
                                             const StructuredSearchOptions& options = {}) {
  const int ell = inst.num_issues();
  std::vector<int> coords = options.free_coordinates;
  if (coords.empty()) {
    for (int k = 0; k < ell; ++k) coords.push_back(k);
  }
  for (int k : coords) {
    if (k < 0 || k >= ell) throw Error(ErrorCode::kIndexOutOfRange, "structured search coordinate out of range");
  }
  for (int k : options.fixed_on) {
    if (k < 0 || k >= ell) throw Error(ErrorCode::kIndexOutOfRange, "structured search coordinate out of range");
  }
  if (coords.size() > 24) throw Error(ErrorCode::kEnumerationCapExceeded, "structured search needs at most 24 coordinates");
  if (options.constraint) validate_constraint(*options.constraint, ell);

  const PreferenceTensor tensor(inst);
  OracleResult best;
  const std::uint64_t limit = std::uint64_t{1} << coords.size();
  for (std::uint64_t mask = options.fixed_on.empty() ? 1 : 0; mask < limit; ++mask) {
    Vector wp = Vector::Zero(ell);
    for (int k : options.fixed_on) wp[k] = 1.0;
    for (std::size_t b = 0; b < coords.size(); ++b) {
      if (mask & (std::uint64_t{1} << b)) wp[coords[b]] = 1.0;
    }
    wp /= wp.sum();
    ++best.points;
    if (options.constraint && !admissible(*options.constraint, inst.weights(), wp)) continue;
    const double v = evaluate_objective(tensor, wp, objective);
    if (!best.found || v > best.value) {
      best.found = true;
      best.value = v;
      best.w_prime = wp;
    }
  }
  if (best.found) best.x = best.w_prime - inst.weights();
  return best;
}

// ---------------------------------------------------------------------------
// Projected gradient for the linear stochastic objective

struct PgdOptions {
  int max_iterations = 100000;
  double tolerance = 1e-8;
};

struct PgdResult {
  Vector x;
  double value = 0.0;
  bool converged = false;
  int iterations = 0;
  double gradient_mapping_norm = 0.0;
};

namespace oracle_detail {

// t in [0, r] solving t + lambda p t^(p-1) = r; safeguarded Newton.
inline double shrink(double r, double lambda, double p) {
  if (r <= 0.0 || lambda <= 0.0) return std::max(r, 0.0);
  double a = 0.0, b = r, t = 0.5 * r;
  for (int it = 0; it < 100; ++it) {
    const double f = t + lambda * p * std::pow(t, p - 1.0) - r;
    if (f > 0.0) b = t; else a = t;
    const double df = 1.0 + lambda * p * (p - 1.0) * std::pow(t, p - 2.0);
    double next = t - f / df;
    if (!(next > a && next < b)) next = 0.5 * (a + b);
    if (std::abs(next - t) <= 1e-17 * (1.0 + r) || b - a <= 1e-17 * (1.0 + r)) return next;
    t = next;
  }
  return t;
}

// Minimizer of 1/2 (x - y + mu)^2 + lambda |x|^p over [lo, hi] per
// coordinate, i.e. the ball-shrunk, shifted, clamped point.
inline Vector shifted_point(const Vector& y, double mu, double lambda, double p, const Vector& lo, const Vector& hi) {
  Vector x(y.size());
  for (Eigen::Index k = 0; k < y.size(); ++k) {
    const double r = y[k] - mu;
    x[k] = std::clamp(std::copysign(shrink(std::abs(r), lambda, p), r), lo[k], hi[k]);
  }
  return x;
}

// For fixed lambda, the shift mu making the coordinates sum to s.
inline Vector balance(const Vector& y, double lambda, double p, const Vector& lo, const Vector& hi, double s) {
  double a = (y - hi).minCoeff() - 1.0;
  double b = (y - lo).maxCoeff() + 1.0;
  for (int it = 0; it < 200 && b - a > 1e-16 * (1.0 + std::abs(a) + std::abs(b)); ++it) {
    const double mid = 0.5 * (a + b);
    if (shifted_point(y, mid, lambda, p, lo, hi).sum() > s) a = mid; else b = mid;
  }
  return shifted_point(y, 0.5 * (a + b), lambda, p, lo, hi);
}

// Euclidean projection onto {||x||_p <= B} intersected with
// {sum x = s, lo <= x <= hi}. KKT gives x = balance(y, lambda) with the ball
// multiplier lambda >= 0; ||x(lambda)||_p is nonincreasing in lambda, so an
// outer bisection finds the smallest lambda that lands inside the ball.
inline Vector project_intersection(const Vector& y, double p, double B, const Vector& lo, const Vector& hi, double s) {
  Vector x = balance(y, 0.0, p, lo, hi, s);
  if (lp_norm(x, p) <= B) return x;
  double a = 0.0, b = 1.0;
  while (lp_norm(balance(y, b, p, lo, hi, s), p) > B && b < 1e300) b *= 4.0;
  for (int it = 0; it < 200 && b - a > 1e-15 * b; ++it) {
    const double mid = 0.5 * (a + b);
    if (lp_norm(balance(y, mid, p, lo, hi, s), p) > B) a = mid; else b = mid;
  }
  return balance(y, b, p, lo, hi, s);
}

}  // namespace oracle_detail

/// Maximizes the expected votes of a linear model over ||x||_p <= B and the
/// simplex box by projected gradient ascent with growing steps.
inline PgdResult projected_gradient_oracle(const ElectionInstance& inst, const LinearModel& model,
                                           const NormBudget& budget, const PgdOptions& options = {}) {
  if (!(budget.p_norm > 1.0)) throw Error(ErrorCode::kInvalidArgument, "projected gradient oracle needs p > 1");
  const PreferenceTensor tensor(inst);
  validate_model(model, inst.num_candidates());
  const Vector& w = inst.weights();
  const int ell = inst.num_issues();

  // The objective is affine in x; its gradient is the sum of the weighted
  // preference vectors, assembled here directly from the tensor.
  Vector grad = Vector::Zero(ell);
  for (int j = 0; j < inst.num_voters(); ++j) {
    for (int i = 1; i < inst.num_candidates(); ++i) grad += model.gamma[i - 1] * tensor.preference(j, i);
  }
  const Vector lo = -w, hi = Vector::Ones(ell) - w;
  const double s = 1.0 - w.sum();
  const double radius = budget.unbounded() ? 2.0 : budget.budget;
  const double p = std::isinf(budget.p_norm) ? 1e6 : budget.p_norm;
  auto project = [&](const Vector& y) { return oracle_detail::project_intersection(y, p, radius, lo, hi, s); };

  PgdResult out;
  out.x = project(Vector::Zero(ell));
  if (grad.cwiseAbs().maxCoeff() == 0.0) {
    out.converged = true;
  } else {
    double step = 1e-2 / grad.norm();
    for (out.iterations = 0; out.iterations < options.max_iterations; ++out.iterations) {
      const Vector next = project(out.x + step * grad);
      out.gradient_mapping_norm = (next - out.x).norm() / step;
      const bool settled = (next - out.x).cwiseAbs().maxCoeff() <= 1e-15;
      out.x = next;
      if (out.gradient_mapping_norm <= options.tolerance || (settled && step > 1e12)) {
        out.converged = true;
        break;
      }
      if (step < 1e15) step *= 2.0;
    }
  }
  out.value = expected_votes(tensor, w + out.x, model).value;
  return out;
}

}  // namespace salience
