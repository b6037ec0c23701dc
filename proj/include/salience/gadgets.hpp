#pragma once

// Instance generators for the hardness constructions.
//
// All generators use c0 = all ones, c1 = all zeros, uniform base weights and
// p = 1 (positions are binary or 0.5, so the tensor does not depend on p).
// Every voter carries a provenance label.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "salience/election.hpp"
#include "salience/error.hpp"

namespace salience {

/// Two-candidate binary issue-selection instance; n' = voters.rows().
struct TcmsInstance {
  Matrix voters;

  int num_voters() const { return static_cast<int>(voters.rows()); }
  int num_issues() const { return static_cast<int>(voters.cols()); }
};

struct Literal {
  int variable = 0;
  bool negated = false;
};

struct Clause {
  Literal first;
  Literal second;
};

struct Max2SatFormula {
  int num_variables = 0;
  std::vector<Clause> clauses;
};

struct GadgetInstance {
  ElectionInstance instance;
  std::vector<std::string> labels;
};

struct Max2SatGadget {
  ElectionInstance instance;
  SigmoidModel model;
  std::vector<std::string> labels;
  int beta1 = 0;
  int beta2 = 0;
};

namespace detail {

class VoterBuilder {
 public:
  explicit VoterBuilder(int ell) : ell_(ell) {}

  void add(const Vector& v, const std::string& label, long copies = 1) {
    for (long c = 0; c < copies; ++c) {
      rows_.push_back(v);
      labels_.push_back(label);
    }
  }

  GadgetInstance finish() const {
    Matrix voters(static_cast<Eigen::Index>(rows_.size()), ell_);
    for (std::size_t j = 0; j < rows_.size(); ++j) voters.row(static_cast<Eigen::Index>(j)) = rows_[j].transpose();
    Matrix candidates(2, ell_);
    candidates.row(0).setOnes();
    candidates.row(1).setZero();
    return {ElectionInstance(candidates, voters, Vector::Constant(ell_, 1.0 / ell_), 1.0), labels_};
  }

 private:
  int ell_;
  std::vector<Vector> rows_;
  std::vector<std::string> labels_;
};

inline void validate_tcms(const TcmsInstance& t) {
  if (t.num_voters() < 1 || t.num_issues() < 1) {
    throw Error(ErrorCode::kInvalidArgument, "TCMS instance needs at least one voter and one issue");
  }
  for (Eigen::Index j = 0; j < t.voters.rows(); ++j)
    for (Eigen::Index k = 0; k < t.voters.cols(); ++k)
      if (t.voters(j, k) != 0.0 && t.voters(j, k) != 1.0) {
        throw Error(ErrorCode::kInvalidArgument, "TCMS positions must be binary");
      }
}

// Voter built from (first, second) values for each of the l'+1 position
// pairs (k, k + l' + 1). Pair l' is the special pair (l'+1, 2l'+2) in
// 1-based terms.
inline Vector paired_voter(int ellp, const std::vector<std::pair<double, double>>& pairs) {
  Vector v(2 * ellp + 2);
  for (int k = 0; k <= ellp; ++k) {
    v[k] = pairs[static_cast<std::size_t>(k)].first;
    v[k + ellp + 1] = pairs[static_cast<std::size_t>(k)].second;
  }
  return v;
}

inline VoterBuilder tcwms_voters(const TcmsInstance& t) {
  validate_tcms(t);
  const int np = t.num_voters(), ellp = t.num_issues();
  const int ell = 2 * ellp + 2;
  VoterBuilder out(ell);

  for (int j = 0; j < np; ++j) {
    Vector v = Vector::Zero(ell);
    v.head(ellp) = t.voters.row(j).transpose();
    v[ellp] = 1.0;
    v.segment(ellp + 1, ellp) = t.voters.row(j).transpose();
    out.add(v, "V1");
  }

  // V2: one block per shift r, ones on a cyclic window of length l'+1.
  // V3: complements of V2.
  const long big = 8L * np * ellp;
  std::vector<Vector> v2;
  for (int r = 1; r <= ellp + 1; ++r) {
    Vector v(ell);
    for (int k = 1; k <= ell; ++k) v[k - 1] = ((k + r - 1) % ell) + 1 <= ellp + 1 ? 1.0 : 0.0;
    v2.push_back(v);
  }
  for (const Vector& v : v2) out.add(v, "V2", big);
  for (const Vector& v : v2) out.add((Vector::Ones(ell) - v).eval(), "V3", big);

  using Pairs = std::vector<std::pair<double, double>>;
  for (int r = 0; r < ellp; ++r) {
    Pairs pairs(static_cast<std::size_t>(ellp + 1), {1.0, 0.0});
    pairs[static_cast<std::size_t>(r)] = {0.0, 0.0};
    pairs[static_cast<std::size_t>(ellp)] = {1.0, 1.0};
    out.add(paired_voter(ellp, pairs), "V4", 4L * np);
  }
  for (int r = 0; r < ellp; ++r) {
    Pairs pairs(static_cast<std::size_t>(ellp + 1), {1.0, 0.0});
    pairs[static_cast<std::size_t>(r)] = {0.0, 0.0};
    out.add(paired_voter(ellp, pairs), "V5", 2L * np);
  }
  for (int r = 0; r < ellp; ++r) {
    Pairs pairs(static_cast<std::size_t>(ellp + 1), {1.0, 0.0});
    pairs[static_cast<std::size_t>(r)] = {1.0, 1.0};
    pairs[static_cast<std::size_t>(ellp)] = {0.0, 0.0};
    out.add(paired_voter(ellp, pairs), "V6", 2L * np);
  }
  return out;
}

}  // namespace detail

/// Weighted max-support gadget on 2l'+2 issues, voter sets V1..V6.
inline GadgetInstance build_tcwms_gadget(const TcmsInstance& t) { return detail::tcwms_voters(t).finish(); }

/// Size of the all-zeros block appended by build_tcwp_gadget.
inline long tcwp_block_size(int np, int ellp) { return 8L * ellp * ellp * np + 12L * ellp * np; }

/// Weighted plurality gadget: the max-support gadget plus V7, a block of
/// voters that agree with c1 everywhere.
inline GadgetInstance build_tcwp_gadget(const TcmsInstance& t) {
  detail::VoterBuilder b = detail::tcwms_voters(t);
  const int ell = 2 * t.num_issues() + 2;
  b.add(Vector::Zero(ell), "V7", tcwp_block_size(t.num_voters(), t.num_issues()));
  return b.finish();
}

/// Theta(l)-voter gadget on n'^2 l'^2 issues. Voters are ordered by their
/// number of agreements with c0 (stable), and the j-th voter (1-based) gets
/// a private block of ones at l' + [(j^2+j)/2, (j^2+3j)/2].
inline GadgetInstance build_theta_l_gadget(const TcmsInstance& t) {
  detail::validate_tcms(t);
  const long np = t.num_voters(), ellp = t.num_issues();
  const long ell = np * np * ellp * ellp;
  const long last = ellp + (np * np + 3 * np) / 2;
  if (last > ell) {
    throw Error(ErrorCode::kInvalidArgument, "private block of voter " + std::to_string(np) + " ends at issue " +
                                                 std::to_string(last) + " past l = " + std::to_string(ell));
  }
  std::vector<int> order(static_cast<std::size_t>(np));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int x, int y) { return t.voters.row(x).sum() < t.voters.row(y).sum(); });

  detail::VoterBuilder b(static_cast<int>(ell));
  for (long j = 1; j <= np; ++j) {
    const int src = order[static_cast<std::size_t>(j - 1)];
    Vector v = Vector::Zero(ell);
    v.head(ellp) = t.voters.row(src).transpose();
    for (long k = (j * j + j) / 2; k <= (j * j + 3 * j) / 2; ++k) v[ellp + k - 1] = 1.0;
    b.add(v, "S" + std::to_string(static_cast<long>(t.voters.row(src).sum())));
  }
  return b.finish();
}

inline void validate_formula(const Max2SatFormula& phi, bool distinct_variables) {
  if (phi.num_variables < 1) throw Error(ErrorCode::kInvalidArgument, "formula needs at least one variable");
  for (std::size_t c = 0; c < phi.clauses.size(); ++c) {
    const Clause& cl = phi.clauses[c];
    for (const Literal& lit : {cl.first, cl.second}) {
      if (lit.variable < 0 || lit.variable >= phi.num_variables) {
        throw Error(ErrorCode::kInvalidArgument, "clause " + std::to_string(c) + " names an unknown variable");
      }
    }
    if (distinct_variables && cl.first.variable == cl.second.variable) {
      throw Error(ErrorCode::kInvalidArgument, "clause " + std::to_string(c) + " repeats a variable");
    }
  }
}

inline bool satisfied(const Clause& c, std::uint32_t assignment) {
  auto value = [&](const Literal& lit) { return (((assignment >> lit.variable) & 1U) != 0U) != lit.negated; };
  return value(c.first) || value(c.second);
}

/// Most clauses satisfiable by one assignment, by exhaustive enumeration.
inline int max2sat_brute(const Max2SatFormula& phi) {
  validate_formula(phi, false);
  if (phi.num_variables > 20) {
    throw Error(ErrorCode::kEnumerationCapExceeded, "max2sat_brute supports at most 20 variables");
  }
  int best = 0;
  for (std::uint32_t a = 0; a < (1U << phi.num_variables); ++a) {
    int count = 0;
    for (const Clause& c : phi.clauses) count += satisfied(c, a) ? 1 : 0;
    best = std::max(best, count);
  }
  return best;
}

/// Beta2 making beta1 theta(-w_k - h) + beta2 theta(w_k - h) equal at
/// w_k = 0 and w_k = 1, for theta the logistic map with sharpness alpha.
inline double balanced_beta2(double beta1, double alpha, double h = 0.75) {
  auto theta = [alpha](double z) { return logistic(alpha * z); };
  return beta1 * (theta(-h) - theta(-1.0 - h)) / (theta(1.0 - h) - theta(-h));
}

/// Sigmoid gadget on l+1 issues: an anchor block, two blocks per variable
/// and one voter per clause.
inline Max2SatGadget build_max2sat_gadget(const Max2SatFormula& phi, int beta1, int beta2, double alpha) {
  validate_formula(phi, true);
  if (beta1 < 0 || beta2 < 0) throw Error(ErrorCode::kInvalidArgument, "beta counts must be nonnegative");
  if (!(alpha > 0.0)) throw Error(ErrorCode::kInvalidArgument, "alpha must be positive");
  const long ell = phi.num_variables, n = static_cast<long>(phi.clauses.size());
  const int dims = static_cast<int>(ell + 1);
  detail::VoterBuilder b(dims);

  Vector anchor = Vector::Zero(dims);
  anchor[ell] = 1.0;
  b.add(anchor, "anchor", 4L * ell * ell * n * n * (beta1 + beta2));
  for (long r = 0; r < ell; ++r) {
    Vector v = Vector::Constant(dims, 0.5);
    v[r] = 1.0;
    v[ell] = 0.0;
    b.add(v, "beta1:" + std::to_string(r), n * n * beta1);
  }
  for (long r = 0; r < ell; ++r) {
    Vector v = Vector::Constant(dims, 0.5);
    v[r] = 0.0;
    b.add(v, "beta2:" + std::to_string(r), n * n * beta2);
  }
  for (long j = 0; j < n; ++j) {
    Clause c = phi.clauses[static_cast<std::size_t>(j)];
    if (c.second.negated && !c.first.negated) std::swap(c.first, c.second);
    Vector v = Vector::Constant(dims, 0.5);
    if (!c.first.negated && !c.second.negated) {
      v[c.first.variable] = 0.0;
      v[c.second.variable] = 0.0;
      v[ell] = 1.0;
    } else if (c.first.negated && !c.second.negated) {
      v[c.first.variable] = 0.0;
      v[c.second.variable] = 1.0;
    } else {
      v[c.first.variable] = 1.0;
      v[c.second.variable] = 1.0;
      v[ell] = 0.0;
    }
    b.add(v, "clause:" + std::to_string(j));
  }
  GadgetInstance g = b.finish();
  return {std::move(g.instance), SigmoidModel{alpha}, std::move(g.labels), beta1, beta2};
}

}  // namespace salience
