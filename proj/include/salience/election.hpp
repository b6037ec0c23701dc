#pragma once

// Spatial-model plurality elections with a shared issue-weight vector.
//
// Candidates and voters are points in issue space. Index 0 is always the
// attacker's preferred candidate; rivals are 1..m-1. All types are immutable
// after construction and every free function is pure.

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "salience/error.hpp"
#include "salience/norms.hpp"

namespace salience {

/// Two weighted distances closer than this are a tie.
inline constexpr double kTieTolerance = 1e-9;
/// Allowed drift of sum(w) from 1 and of w_k outside [0, 1].
inline constexpr double kSimplexTolerance = 1e-9;
/// Linear stochastic probabilities may leave [0, 1] by this much silently.
inline constexpr double kProbabilityTolerance = 1e-6;

inline void check_simplex(const Vector& w, Eigen::Index ell) {
  if (w.size() != ell) {
    throw Error(ErrorCode::kDimensionMismatch,
                "weight vector has " + std::to_string(w.size()) + " entries, expected " +
                    std::to_string(ell));
  }
  for (Eigen::Index k = 0; k < w.size(); ++k) {
    if (!std::isfinite(w[k]) || w[k] < -kSimplexTolerance || w[k] > 1.0 + kSimplexTolerance) {
      throw Error(ErrorCode::kSimplexViolation,
                  "weight " + std::to_string(k) + " = " + std::to_string(w[k]) + " outside [0, 1]");
    }
  }
  if (std::abs(w.sum() - 1.0) > kSimplexTolerance) {
    throw Error(ErrorCode::kSimplexViolation,
                "weights sum to " + std::to_string(w.sum()) + ", expected 1");
  }
}

class ElectionInstance {
 public:
  /// `candidates` is m x ell, `voters` is n x ell, `weights` has ell entries.
  ElectionInstance(Matrix candidates, Matrix voters, Vector weights, double p)
      : candidates_(std::move(candidates)),
        voters_(std::move(voters)),
        weights_(std::move(weights)),
        p_(p) {
    if (!(p_ >= 1.0) || !std::isfinite(p_)) {
      throw Error(ErrorCode::kInvalidArgument, "distance exponent p must be finite and >= 1");
    }
    if (candidates_.rows() < 2) {
      throw Error(ErrorCode::kInvalidArgument, "need at least two candidates");
    }
    if (voters_.rows() < 1) throw Error(ErrorCode::kInvalidArgument, "need at least one voter");
    if (candidates_.cols() < 1) throw Error(ErrorCode::kInvalidArgument, "need at least one issue");
    if (voters_.cols() != candidates_.cols()) {
      throw Error(ErrorCode::kDimensionMismatch, "voters and candidates disagree on issue count");
    }
    if (!candidates_.allFinite() || !voters_.allFinite()) {
      throw Error(ErrorCode::kInvalidArgument, "positions must be finite");
    }
    check_simplex(weights_, candidates_.cols());
  }

  int num_candidates() const { return static_cast<int>(candidates_.rows()); }
  int num_voters() const { return static_cast<int>(voters_.rows()); }
  int num_issues() const { return static_cast<int>(candidates_.cols()); }

  const Matrix& candidates() const { return candidates_; }
  const Matrix& voters() const { return voters_; }
  const Vector& weights() const { return weights_; }
  double p() const { return p_; }

  bool operator==(const ElectionInstance& other) const {
    return p_ == other.p_ && candidates_ == other.candidates_ && voters_ == other.voters_ &&
           weights_ == other.weights_;
  }

 private:
  Matrix candidates_;
  Matrix voters_;
  Vector weights_;
  double p_;
};

// ---------------------------------------------------------------------------
// Attacker constraints

/// ||x||_p <= budget. An infinite budget means the attacker is unconstrained.
struct NormBudget {
  double p_norm = 2.0;
  double budget = 0.0;

  bool unbounded() const { return std::isinf(budget); }
  bool operator==(const NormBudget&) const = default;
};

/// w_k + x_k must lie in [lower_k, upper_k] for each issue.
struct IntervalBox {
  std::vector<std::pair<double, double>> intervals;

  static IntervalBox full(int ell) {
    return IntervalBox{std::vector<std::pair<double, double>>(static_cast<std::size_t>(ell), {0.0, 1.0})};
  }
  bool operator==(const IntervalBox&) const = default;
};

using AttackConstraint = std::variant<NormBudget, IntervalBox>;

inline void validate_constraint(const AttackConstraint& constraint, int ell) {
  if (const auto* nb = std::get_if<NormBudget>(&constraint)) {
    if (!(nb->p_norm >= 1.0)) throw Error(ErrorCode::kSchema, "budget norm p must be >= 1");
    if (!(nb->budget >= 0.0)) throw Error(ErrorCode::kSchema, "budget B must be >= 0");
    return;
  }
  const auto& box = std::get<IntervalBox>(constraint);
  if (static_cast<int>(box.intervals.size()) != ell) {
    throw Error(ErrorCode::kDimensionMismatch,
                "interval constraint has " + std::to_string(box.intervals.size()) +
                    " intervals, expected " + std::to_string(ell));
  }
  for (std::size_t k = 0; k < box.intervals.size(); ++k) {
    const auto [lo, hi] = box.intervals[k];
    if (!(lo >= 0.0) || !(hi <= 1.0) || !(lo <= hi)) {
      throw Error(ErrorCode::kSchema, "interval " + std::to_string(k) + " is not 0 <= lo <= hi <= 1");
    }
  }
}

/// Slack of the constraint at perturbation x; >= 0 means satisfied. For a
/// budget this is B - ||x||_p, for a box the smallest distance to a face.
inline double constraint_slack(const AttackConstraint& constraint, const Vector& w, const Vector& x) {
  if (const auto* nb = std::get_if<NormBudget>(&constraint)) {
    if (nb->unbounded()) return kInfinity;
    return nb->budget - lp_norm(x, nb->p_norm);
  }
  const auto& box = std::get<IntervalBox>(constraint);
  double slack = kInfinity;
  for (std::size_t k = 0; k < box.intervals.size(); ++k) {
    const double wk = w[static_cast<Eigen::Index>(k)] + x[static_cast<Eigen::Index>(k)];
    slack = std::min({slack, wk - box.intervals[k].first, box.intervals[k].second - wk});
  }
  return slack;
}

// ---------------------------------------------------------------------------
// Preference tensor

/// Per voter j, candidate i and issue k stores |c_ik - v_jk|^p. The
/// preference vector of voter j for candidate `preferred` over `rival` is
///   a_jk = |c_rival,k - v_jk|^p - |c_preferred,k - v_jk|^p.
///
/// Comparisons never take the 1/p root. Since t -> t^(1/p) is strictly
/// increasing on [0, inf), d_rival >= d_preferred holds exactly when
/// sum_k w_k |c_rival,k - v_jk|^p >= sum_k w_k |c_preferred,k - v_jk|^p, which
/// is <w, a_j> >= 0. The weighted p-th powers are therefore a faithful and
/// root-free stand-in for the distances.
class PreferenceTensor {
 public:
  explicit PreferenceTensor(const ElectionInstance& inst)
      : n_(inst.num_voters()), m_(inst.num_candidates()), ell_(inst.num_issues()) {
    cost_.resize(static_cast<std::size_t>(n_) * m_ * ell_);
    for (int j = 0; j < n_; ++j) {
      for (int i = 0; i < m_; ++i) {
        for (int k = 0; k < ell_; ++k) {
          cost_[index(j, i, k)] =
              std::pow(std::abs(inst.candidates()(i, k) - inst.voters()(j, k)), inst.p());
        }
      }
    }
  }

  int num_voters() const { return n_; }
  int num_candidates() const { return m_; }
  int num_issues() const { return ell_; }

  /// a_jk for candidate 0 over `rival`.
  double entry(int j, int rival, int k) const { return entry(j, 0, rival, k); }

  double entry(int j, int preferred, int rival, int k) const {
    return cost_[index(j, rival, k)] - cost_[index(j, preferred, k)];
  }

  /// Preference vector of voter j for candidate 0 over `rival`.
  Vector preference(int j, int rival) const { return preference(j, 0, rival); }

  Vector preference(int j, int preferred, int rival) const {
    check(j, preferred);
    check(j, rival);
    Vector a(ell_);
    for (int k = 0; k < ell_; ++k) a[k] = entry(j, preferred, rival, k);
    return a;
  }

  /// <w, a_j^(preferred, rival)>; positive means `preferred` is closer.
  double margin(int j, int preferred, int rival, const Vector& w) const {
    double s = 0.0;
    for (int k = 0; k < ell_; ++k) s += w[k] * entry(j, preferred, rival, k);
    return s;
  }

  /// sum_k w_k |c_ik - v_jk|^p, the p-th power of the weighted distance.
  double distance_power(int j, int i, const Vector& w) const {
    double s = 0.0;
    for (int k = 0; k < ell_; ++k) s += w[k] * cost_[index(j, i, k)];
    return s;
  }

 private:
  std::size_t index(int j, int i, int k) const {
    return (static_cast<std::size_t>(j) * m_ + i) * ell_ + k;
  }
  void check(int j, int i) const {
    if (j < 0 || j >= n_ || i < 0 || i >= m_) {
      throw Error(ErrorCode::kIndexOutOfRange, "voter/candidate index out of range");
    }
  }

  int n_;
  int m_;
  int ell_;
  std::vector<double> cost_;
};

// ---------------------------------------------------------------------------
// Deterministic voting

inline double weighted_distance(const ElectionInstance& inst, int j, int i, const Vector& w) {
  if (j < 0 || j >= inst.num_voters() || i < 0 || i >= inst.num_candidates()) {
    throw Error(ErrorCode::kIndexOutOfRange, "voter/candidate index out of range");
  }
  check_simplex(w, inst.num_issues());
  double s = 0.0;
  for (int k = 0; k < inst.num_issues(); ++k) {
    s += w[k] * std::pow(std::abs(inst.candidates()(i, k) - inst.voters()(j, k)), inst.p());
  }
  return std::pow(s, 1.0 / inst.p());
}

struct Tally {
  std::vector<int> votes;   // per candidate
  std::vector<int> chosen;  // per voter
};

/// Candidate voter j picks under w: the lowest index whose margin against
/// every other candidate is at least -kTieTolerance.
inline int choose_candidate(const PreferenceTensor& tensor, int j, const Vector& w) {
  const int m = tensor.num_candidates();
  for (int i = 0; i < m; ++i) {
    bool ok = true;
    for (int r = 0; r < m && ok; ++r) {
      if (r != i && tensor.margin(j, i, r, w) < -kTieTolerance) ok = false;
    }
    if (ok) return i;
  }
  // Unreachable up to rounding; fall back to the exact argmin.
  int best = 0;
  for (int i = 1; i < m; ++i) {
    if (tensor.distance_power(j, i, w) < tensor.distance_power(j, best, w)) best = i;
  }
  return best;
}

inline Tally deterministic_tally(const PreferenceTensor& tensor, const Vector& w) {
  check_simplex(w, tensor.num_issues());
  Tally t;
  t.votes.assign(static_cast<std::size_t>(tensor.num_candidates()), 0);
  t.chosen.resize(static_cast<std::size_t>(tensor.num_voters()));
  for (int j = 0; j < tensor.num_voters(); ++j) {
    const int c = choose_candidate(tensor, j, w);
    t.chosen[static_cast<std::size_t>(j)] = c;
    ++t.votes[static_cast<std::size_t>(c)];
  }
  return t;
}

inline Tally deterministic_tally(const ElectionInstance& inst, const Vector& w) {
  return deterministic_tally(PreferenceTensor(inst), w);
}

/// Plurality winner; ties go to the lowest index, so candidate 0 wins any tie
/// for the maximum.
inline int plurality_outcome(const Tally& t) {
  int best = 0;
  for (std::size_t i = 1; i < t.votes.size(); ++i) {
    if (t.votes[i] > t.votes[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  }
  return best;
}

// ---------------------------------------------------------------------------
// Stochastic voting

/// f(v_j, c_0) = gamma0 + sum_i gamma_i <w, a_j^(i)>, one gamma per rival.
struct LinearModel {
  double gamma0 = 0.5;
  Vector gamma;

  bool operator==(const LinearModel& o) const { return gamma0 == o.gamma0 && gamma == o.gamma; }
};

/// f(v_j, c_0) = 1 / (1 + exp(-alpha <w, a_j>)); two candidates only.
struct SigmoidModel {
  double alpha = 1.0;

  bool operator==(const SigmoidModel&) const = default;
};

using StochasticModel = std::variant<LinearModel, SigmoidModel>;

/// gamma0 = 1/2 and every gamma_i = 1 / (2 (m-1) A) with A the largest
/// ||a_j^(i)||_1. Each |<w, a>| <= A on the simplex, so f stays in [0, 1].
inline LinearModel default_linear_model(const PreferenceTensor& tensor) {
  double a_max = 0.0;
  for (int j = 0; j < tensor.num_voters(); ++j) {
    for (int i = 1; i < tensor.num_candidates(); ++i) {
      a_max = std::max(a_max, tensor.preference(j, i).lpNorm<1>());
    }
  }
  const int rivals = tensor.num_candidates() - 1;
  LinearModel model;
  model.gamma0 = 0.5;
  model.gamma = Vector::Constant(rivals, a_max > 0.0 ? 0.5 / (rivals * a_max) : 0.0);
  return model;
}

inline double logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline void validate_model(const StochasticModel& model, int num_candidates) {
  if (const auto* lin = std::get_if<LinearModel>(&model)) {
    if (lin->gamma.size() != num_candidates - 1) {
      throw Error(ErrorCode::kDimensionMismatch, "linear model needs one gamma per rival");
    }
    return;
  }
  const auto& sig = std::get<SigmoidModel>(model);
  if (num_candidates != 2) {
    throw Error(ErrorCode::kInvalidArgument, "sigmoid model is defined for two candidates");
  }
  if (!(sig.alpha > 0.0)) throw Error(ErrorCode::kSchema, "sigmoid alpha must be > 0");
}

/// Probability that voter j picks candidate 0. Linear values are unclamped.
inline double vote_probability(const PreferenceTensor& tensor, int j, const Vector& w,
                               const StochasticModel& model) {
  if (const auto* lin = std::get_if<LinearModel>(&model)) {
    double f = lin->gamma0;
    for (int i = 1; i < tensor.num_candidates(); ++i) f += lin->gamma[i - 1] * tensor.margin(j, 0, i, w);
    return f;
  }
  return logistic(std::get<SigmoidModel>(model).alpha * tensor.margin(j, 0, 1, w));
}

struct ExpectedVotes {
  double value = 0.0;
  /// Set when some linear probability left [0, 1] by more than kProbabilityTolerance.
  bool range_warning = false;
};

inline ExpectedVotes expected_votes(const PreferenceTensor& tensor, const Vector& w,
                                    const StochasticModel& model) {
  check_simplex(w, tensor.num_issues());
  validate_model(model, tensor.num_candidates());
  ExpectedVotes out;
  for (int j = 0; j < tensor.num_voters(); ++j) {
    const double f = vote_probability(tensor, j, w, model);
    if (f < -kProbabilityTolerance || f > 1.0 + kProbabilityTolerance) out.range_warning = true;
    out.value += f;
  }
  return out;
}

inline ExpectedVotes expected_votes(const ElectionInstance& inst, const Vector& w,
                                    const StochasticModel& model) {
  return expected_votes(PreferenceTensor(inst), w, model);
}

}  // namespace salience
