#pragma once

// Expected-vote maximization under a linear probability model.
//
// The objective is affine in x: sum_j f_j(w + x) = <b, x> + C. Under a box
// it is one LP. Under ||x||_p <= B with 1 < p < inf:
//   1. the unconstrained maximizer on the ball is the dual-norm point
//        x_k = B sign(b_k) (|b_k| / ||b||_q)^(q-1),  q = p / (p - 1);
//   2. coordinates leaving the simplex box [-w_k, 1 - w_k] are clamped to the
//      face, removed, and the rest recomputed with the remaining budget
//        B_rem^p = B^p - sum |clamped|^p
//      until nothing leaves the box (at most ell rounds);
//   3. sum_k x_k = 1 - sum_k w_k is restored by shifting the coefficients to
//      b - mu 1 and bisecting on mu. Maximizing <b - mu 1, x> over ball and
//      box gives a sum that is nonincreasing in mu, and the mu hitting the
//      target sum is the Lagrange multiplier of that equality, so the
//      shifted point is optimal for the full program.
// The result is cross-checked against projected gradient ascent and the
// better of the two is returned.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "salience/control.hpp"
#include "salience/election.hpp"
#include "salience/lp.hpp"
#include "salience/oracles.hpp"

namespace salience {

struct LinearCoefficients {
  Vector b;
  double constant = 0.0;
};

/// b_k = sum_j sum_i gamma_i a_jk^(i), C = n gamma0 + <b, w>.
inline LinearCoefficients linear_coefficients(const PreferenceTensor& tensor, const Vector& w,
                                              const LinearModel& model) {
  validate_model(model, tensor.num_candidates());
  LinearCoefficients out;
  out.b = Vector::Zero(tensor.num_issues());
  for (int j = 0; j < tensor.num_voters(); ++j) {
    for (int i = 1; i < tensor.num_candidates(); ++i) out.b += model.gamma[i - 1] * tensor.preference(j, i);
  }
  out.constant = tensor.num_voters() * model.gamma0 + out.b.dot(w);
  return out;
}

inline LinearCoefficients linear_coefficients(const ElectionInstance& inst, const LinearModel& model) {
  return linear_coefficients(PreferenceTensor(inst), inst.weights(), model);
}

/// argmax <b, x> subject to ||x||_p <= B. For p = 1 the whole budget goes to
/// the first coordinate of largest |b_k|; for p = inf every coordinate
/// saturates.
inline Vector dual_norm_maximizer(const Vector& b, double p, double B) {
  if (b.size() == 0 || b.cwiseAbs().maxCoeff() == 0.0 || B == 0.0) return Vector::Zero(b.size());
  if (p == 1.0) {
    Eigen::Index best = 0;
    b.cwiseAbs().maxCoeff(&best);
    Vector x = Vector::Zero(b.size());
    x[best] = std::copysign(B, b[best]);
    return x;
  }
  if (is_infinite_norm(p)) {
    return b.unaryExpr([B](double v) { return v == 0.0 ? 0.0 : std::copysign(B, v); });
  }
  const double q = conjugate_exponent(p);
  const double bq = lp_norm(b, q);
  Vector x(b.size());
  for (Eigen::Index k = 0; k < b.size(); ++k) {
    x[k] = b[k] == 0.0 ? 0.0 : B * std::copysign(std::pow(std::abs(b[k]) / bq, q - 1.0), b[k]);
  }
  return x;
}

struct TruncationResult {
  Vector x;
  std::vector<int> truncated;  // 1 where x_k was clamped to a face
  int rounds = 0;
};

/// argmax <b, x> over ||x||_p <= B and lo <= x <= hi by repeated clamping.
inline TruncationResult truncation_loop(const Vector& b, double p, double B, const Vector& lo, const Vector& hi) {
  const Eigen::Index ell = b.size();
  TruncationResult out;
  out.x = Vector::Zero(ell);
  out.truncated.assign(static_cast<std::size_t>(ell), 0);
  double remaining = std::pow(B, p);
  for (out.rounds = 1; out.rounds <= ell + 1; ++out.rounds) {
    std::vector<Eigen::Index> free;
    for (Eigen::Index k = 0; k < ell; ++k) {
      if (!out.truncated[static_cast<std::size_t>(k)]) free.push_back(k);
    }
    Vector bf(static_cast<Eigen::Index>(free.size()));
    for (std::size_t i = 0; i < free.size(); ++i) bf[static_cast<Eigen::Index>(i)] = b[free[i]];
    const Vector xf = dual_norm_maximizer(bf, p, std::pow(std::max(remaining, 0.0), 1.0 / p));
    bool clamped = false;
    for (std::size_t i = 0; i < free.size(); ++i) {
      const Eigen::Index k = free[i];
      out.x[k] = xf[static_cast<Eigen::Index>(i)];
      const double face = out.x[k] > hi[k] ? hi[k] : (out.x[k] < lo[k] ? lo[k] : out.x[k]);
      if (face != out.x[k]) {
        out.x[k] = face;
        out.truncated[static_cast<std::size_t>(k)] = 1;
        remaining -= std::pow(std::abs(face), p);
        clamped = true;
      }
    }
    if (!clamped) break;
  }
  return out;
}

enum class StochasticSource { kLinearProgram, kAnalytic, kCrossCheck };

inline const char* to_string(StochasticSource s) {
  switch (s) {
    case StochasticSource::kLinearProgram: return "linear_program";
    case StochasticSource::kAnalytic: return "analytic";
    case StochasticSource::kCrossCheck: return "crosscheck";
  }
  return "unknown";
}

struct StochasticSolution : AttackSolution {
  LinearCoefficients coefficients;
  StochasticSource source = StochasticSource::kLinearProgram;
  /// Analytic-route output before the cross-check (budget, 1 < p < inf).
  Vector analytic_x;
  double analytic_value = 0.0;
  double crosscheck_value = 0.0;
  /// Shift mu with analytic_x = truncation_loop(b - mu 1).
  double shift = 0.0;
  std::vector<int> truncated;
  bool range_warning = false;
};

namespace detail {

inline Vector sum_repaired(const Vector& b, double p, double B, const Vector& lo, const Vector& hi, double target,
                           double& mu, std::vector<int>& truncated) {
  auto at = [&](double shift) { return truncation_loop((b.array() - shift).matrix(), p, B, lo, hi); };
  const double spread = b.cwiseAbs().maxCoeff() + 1.0;
  double a = b.minCoeff() - spread, c = b.maxCoeff() + spread;
  for (int it = 0; it < 300 && c - a > 1e-16 * spread; ++it) {
    const double mid = 0.5 * (a + c);
    if (at(mid).x.sum() > target) a = mid; else c = mid;
  }
  // Pick the end of the final bracket whose sum is closer to the target.
  const TruncationResult ra = at(a), rc = at(c);
  const bool use_a = std::abs(ra.x.sum() - target) <= std::abs(rc.x.sum() - target);
  mu = use_a ? a : c;
  truncated = use_a ? ra.truncated : rc.truncated;
  return use_a ? ra.x : rc.x;
}

inline ProgramSolution linear_attack_lp(const Vector& b, const Vector& w, const AttackConstraint& constraint) {
  const int ell = static_cast<int>(w.size());
  LinearConstraints c = LinearConstraints::free(ell);
  c.lower = -w;
  c.upper = Vector::Ones(ell) - w;
  c.add_equality(Vector::Ones(ell), 1.0 - w.sum());
  if (const auto* box = std::get_if<IntervalBox>(&constraint)) {
    for (int k = 0; k < ell; ++k) {
      c.lower[k] = std::max(c.lower[k], box->intervals[static_cast<std::size_t>(k)].first - w[k]);
      c.upper[k] = std::min(c.upper[k], box->intervals[static_cast<std::size_t>(k)].second - w[k]);
    }
    return solve_lp({-b, c});
  }
  const auto& nb = std::get<NormBudget>(constraint);
  if (nb.unbounded()) return solve_lp({-b, c});
  if (is_infinite_norm(nb.p_norm)) {
    for (int k = 0; k < ell; ++k) {
      c.lower[k] = std::max(c.lower[k], -nb.budget);
      c.upper[k] = std::min(c.upper[k], nb.budget);
    }
    return solve_lp({-b, c});
  }
  // p = 1: x split by u >= |x|, sum u <= B.
  LinearConstraints s = widen(c, ell);
  for (int k = 0; k < ell; ++k) {
    Vector row = Vector::Zero(2 * ell);
    row[k] = 1.0;
    row[ell + k] = -1.0;
    s.add_less_equal(row, 0.0);
    row[k] = -1.0;
    s.add_less_equal(row, 0.0);
  }
  Vector total = Vector::Zero(2 * ell);
  total.tail(ell).setOnes();
  s.add_less_equal(total, nb.budget);
  Vector obj = Vector::Zero(2 * ell);
  obj.head(ell) = -b;
  ProgramSolution sol = solve_lp({obj, s});
  if (sol.z.size() == 2 * ell) sol.z = Vector(sol.z.head(ell));
  return sol;
}

}  // namespace detail

/// Maximizes expected votes for candidate 0 under a linear model.
inline StochasticSolution stochastic_linear_max(const ElectionInstance& inst, const LinearModel& model,
                                                const AttackConstraint& constraint, double eps = kDefaultEps) {
  validate_constraint(constraint, inst.num_issues());
  const PreferenceTensor tensor(inst);
  const Vector& w = inst.weights();
  const int ell = inst.num_issues();
  StochasticSolution out;
  out.eps_used = eps;
  out.coefficients = linear_coefficients(tensor, w, model);
  const Vector& b = out.coefficients.b;

  const auto* nb = std::get_if<NormBudget>(&constraint);
  const bool analytic = nb != nullptr && !nb->unbounded() && nb->p_norm > 1.0 && !is_infinite_norm(nb->p_norm);
  if (b.cwiseAbs().maxCoeff() == 0.0) {
    out.x = Vector::Zero(ell);
    out.source = analytic ? StochasticSource::kAnalytic : StochasticSource::kLinearProgram;
    // x = 0 may still be excluded by an interval box; fall through to the LP.
    if (admissible(constraint, w, w)) {
      out.analytic_x = out.x;
      out.verdict = Verdict::kWin;
    }
  }

  if (out.verdict != Verdict::kWin) {
    if (analytic) {
      out.source = StochasticSource::kAnalytic;
      out.analytic_x = detail::sum_repaired(b, nb->p_norm, nb->budget, -w, Vector::Ones(ell) - w, 1.0 - w.sum(),
                                            out.shift, out.truncated);
      out.x = detail::clean_perturbation(w, out.analytic_x);
      out.verdict = Verdict::kWin;
    } else {
      const ProgramSolution s = detail::linear_attack_lp(b, w, constraint);
      out.programs_solved = 1;
      if (s.status != SolveStatus::kOptimal) {
        out.verdict = Verdict::kNoWin;
        out.x = Vector::Zero(ell);
        detail::finish(out, inst, constraint);
        return out;
      }
      out.x = detail::clean_perturbation(w, s.z);
      out.verdict = Verdict::kWin;
    }
  }

  out.analytic_value = expected_votes(tensor, w + out.x, model).value;
  if (analytic) {
    const PgdResult check = projected_gradient_oracle(inst, model, *nb);
    out.crosscheck_value = check.value;
    if (check.value > out.analytic_value) {
      out.x = detail::clean_perturbation(w, check.x);
      out.source = StochasticSource::kCrossCheck;
    }
  }

  const ExpectedVotes ev = expected_votes(tensor, w + out.x, model);
  out.expected_votes = ev.value;
  out.range_warning = ev.range_warning;
  detail::finish(out, inst, constraint);
  return out;
}

}  // namespace salience
