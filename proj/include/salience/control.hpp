#pragma once

// Deterministic control attacks: Max Support by demographic enumeration and
// Majority Vote by assignment enumeration. Both run on deduplicated voters.

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "salience/election.hpp"
#include "salience/oracles.hpp"
#include "salience/parallel.hpp"
#include "salience/unanimity.hpp"

namespace salience {

inline constexpr std::uint64_t kDefaultEnumerationCap = std::uint64_t{1} << 22;

struct ControlOptions {
  std::uint64_t enumeration_cap = kDefaultEnumerationCap;
  int threads = 1;
};

struct DedupInstance {
  ElectionInstance unique;
  std::vector<int> multiplicity;  // per unique voter
  std::vector<int> group;         // original voter -> unique voter
};

/// Groups voters with identical coordinate vectors, in order of first
/// appearance.
inline DedupInstance dedup(const ElectionInstance& inst) {
  std::map<std::vector<double>, int> seen;
  std::vector<int> group(static_cast<std::size_t>(inst.num_voters()));
  std::vector<int> multiplicity;
  std::vector<int> first;
  for (int j = 0; j < inst.num_voters(); ++j) {
    const Vector row = inst.voters().row(j).transpose();
    std::vector<double> key(row.data(), row.data() + row.size());
    auto [it, inserted] = seen.emplace(std::move(key), static_cast<int>(multiplicity.size()));
    if (inserted) {
      multiplicity.push_back(0);
      first.push_back(j);
    }
    ++multiplicity[static_cast<std::size_t>(it->second)];
    group[static_cast<std::size_t>(j)] = it->second;
  }
  Matrix voters(static_cast<Eigen::Index>(first.size()), inst.num_issues());
  for (std::size_t g = 0; g < first.size(); ++g) voters.row(static_cast<Eigen::Index>(g)) = inst.voters().row(first[g]);
  return DedupInstance{ElectionInstance(inst.candidates(), voters, inst.weights(), inst.p()), std::move(multiplicity),
                       std::move(group)};
}

enum class Verdict { kWin, kWinWithEpsSlack, kNoWin };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::kWin: return "win";
    case Verdict::kWinWithEpsSlack: return "win_with_eps_slack";
    case Verdict::kNoWin: return "no_win";
  }
  return "unknown";
}

struct AttackSolution {
  Verdict verdict = Verdict::kNoWin;
  Vector x;
  /// Tally at w + x (deterministic modes).
  int votes_for_c1 = 0;
  /// Expected votes at w + x (stochastic mode).
  double expected_votes = 0.0;
  /// Plurality winner at w + x.
  int winner = -1;
  /// ||x||_p in the budget's norm; ||x||_1 under an interval box.
  double norm_used = 0.0;
  double eps_used = 0.0;
  /// Original voter indices forced to candidate 0 (Max Support).
  std::vector<int> demographic;
  /// Candidate per original voter (Majority Vote).
  std::vector<int> assignment;
  std::uint64_t programs_solved = 0;
};

namespace detail {

inline double norm_for(const AttackConstraint& constraint, const Vector& x) {
  if (const auto* nb = std::get_if<NormBudget>(&constraint)) return lp_norm(x, nb->p_norm);
  return x.lpNorm<1>();
}

inline void finish(AttackSolution& s, const ElectionInstance& inst, const AttackConstraint& constraint) {
  if (s.x.size() == 0) s.x = Vector::Zero(inst.num_issues());
  const Tally t = deterministic_tally(inst, inst.weights() + s.x);
  s.votes_for_c1 = t.votes[0];
  s.winner = plurality_outcome(t);
  s.norm_used = norm_for(constraint, s.x);
}

inline bool budget_regime(const AttackConstraint& c) { return std::holds_alternative<NormBudget>(c); }

// True when a replaces the incumbent in a level: smaller norm under a budget,
// earlier canonical position otherwise.
inline bool better_program(const UnanimityResult& a, const UnanimityResult* incumbent, bool budget) {
  if (!a.feasible) return false;
  if (incumbent == nullptr) return true;
  return budget && a.norm_value < incumbent->norm_value;
}

}  // namespace detail

/// Algorithm 1: the largest multiplicity-weighted demographic that can be made
/// to vote for candidate 0 together.
///
/// Groups infeasible alone are dropped and infeasible pairs are recorded,
/// since feasibility is monotone under subsets. Remaining subsets are visited
/// in levels of equal weighted size, largest first; the first level with a
/// feasible subset is optimal. Within it the budget regime takes the minimum
/// norm, the interval regime the first subset in increasing mask order.
inline AttackSolution max_support(const ElectionInstance& inst, const AttackConstraint& constraint,
                                  double eps = kDefaultEps, const ControlOptions& options = {}) {
  validate_constraint(constraint, inst.num_issues());
  const DedupInstance d = dedup(inst);
  const PreferenceTensor tensor(d.unique);
  const Vector& w = inst.weights();
  const bool budget = detail::budget_regime(constraint);
  AttackSolution out;
  out.eps_used = eps;

  auto solve = [&](const std::vector<int>& groups) {
    return solve_vote_rows(w, unanimity_rows(tensor, groups), constraint, eps);
  };

  const UnanimityResult base = solve({});
  ++out.programs_solved;
  if (!base.feasible) {
    // The constraint admits no simplex point at all.
    detail::finish(out, inst, constraint);
    out.verdict = Verdict::kNoWin;
    return out;
  }

  const int u = d.unique.num_voters();
  const auto singles = parallel_map(static_cast<std::size_t>(u), options.threads,
                                    [&](std::size_t g) { return solve({static_cast<int>(g)}); });
  out.programs_solved += static_cast<std::uint64_t>(u);
  std::vector<int> live;
  for (int g = 0; g < u; ++g) {
    if (singles[static_cast<std::size_t>(g)].feasible) live.push_back(g);
  }
  const int k = static_cast<int>(live.size());
  if (k >= 63 || (std::uint64_t{1} << k) > options.enumeration_cap) {
    throw Error(ErrorCode::kEnumerationCapExceeded,
                std::to_string(k) + " voter groups exceed the enumeration cap of " +
                    std::to_string(options.enumeration_cap) + " demographics");
  }

  std::vector<std::pair<int, int>> pairs;
  for (int a = 0; a < k; ++a)
    for (int b = a + 1; b < k; ++b) pairs.emplace_back(a, b);
  const auto pair_results = parallel_map(pairs.size(), options.threads, [&](std::size_t i) {
    return solve({live[static_cast<std::size_t>(pairs[i].first)], live[static_cast<std::size_t>(pairs[i].second)]});
  });
  out.programs_solved += pairs.size();
  std::vector<std::uint64_t> conflict(static_cast<std::size_t>(k), 0);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (!pair_results[i].feasible) {
      conflict[static_cast<std::size_t>(pairs[i].first)] |= std::uint64_t{1} << pairs[i].second;
      conflict[static_cast<std::size_t>(pairs[i].second)] |= std::uint64_t{1} << pairs[i].first;
    }
  }

  struct Candidate {
    std::uint64_t mask;
    long long weight;
  };
  std::vector<Candidate> masks;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << k); ++mask) {
    long long weight = 0;
    bool ok = true;
    for (int b = 0; b < k && ok; ++b) {
      if (!(mask & (std::uint64_t{1} << b))) continue;
      if (mask & conflict[static_cast<std::size_t>(b)]) ok = false;
      weight += d.multiplicity[static_cast<std::size_t>(live[static_cast<std::size_t>(b)])];
    }
    if (ok) masks.push_back({mask, weight});
  }
  std::stable_sort(masks.begin(), masks.end(),
                   [](const Candidate& a, const Candidate& b) { return a.weight > b.weight; });

  auto groups_of = [&](std::uint64_t mask) {
    std::vector<int> groups;
    for (int b = 0; b < k; ++b) {
      if (mask & (std::uint64_t{1} << b)) groups.push_back(live[static_cast<std::size_t>(b)]);
    }
    return groups;
  };

  std::size_t level_start = 0;
  while (level_start < masks.size()) {
    std::size_t level_end = level_start;
    while (level_end < masks.size() && masks[level_end].weight == masks[level_start].weight) ++level_end;
    const auto results = parallel_map(level_end - level_start, options.threads, [&](std::size_t i) {
      const std::uint64_t mask = masks[level_start + i].mask;
      // Empty and single-group demographics were solved already.
      if (mask == 0) return base;
      if ((mask & (mask - 1)) == 0) {
        int b = 0;
        while (!(mask & (std::uint64_t{1} << b))) ++b;
        return singles[static_cast<std::size_t>(live[static_cast<std::size_t>(b)])];
      }
      return solve(groups_of(mask));
    });
    out.programs_solved += level_end - level_start;
    const UnanimityResult* best = nullptr;
    std::size_t best_index = 0;
    for (std::size_t i = 0; i < results.size(); ++i) {
      if (detail::better_program(results[i], best, budget)) {
        best = &results[i];
        best_index = i;
      }
    }
    if (best != nullptr) {
      out.x = best->x;
      out.verdict = best->used_eps_slack ? Verdict::kWinWithEpsSlack : Verdict::kWin;
      const std::vector<int> groups = groups_of(masks[level_start + best_index].mask);
      for (int j = 0; j < inst.num_voters(); ++j) {
        if (std::find(groups.begin(), groups.end(), d.group[static_cast<std::size_t>(j)]) != groups.end()) {
          out.demographic.push_back(j);
        }
      }
      break;
    }
    level_start = level_end;
  }
  detail::finish(out, inst, constraint);
  return out;
}

/// Rows making unique voter g choose candidate i, weak against later and
/// strict against earlier candidates.
inline std::vector<VoteRow> single_assignment_rows(const PreferenceTensor& tensor, int g, int i) {
  std::vector<VoteRow> rows;
  for (int r = 0; r < tensor.num_candidates(); ++r) {
    if (r != i) rows.push_back({tensor.preference(g, i, r), r < i ? kStrictMargin : 0.0});
  }
  return rows;
}

/// Majority Vote: the cheapest (budget) or first (interval) perturbation
/// under which candidate 0 wins the plurality vote.
///
/// Each unique voter is assigned one candidate it can be made to choose on
/// its own; assignments are enumerated in mixed-radix order (voter 0 most
/// significant, candidates ascending) and kept when candidate 0 ties or leads.
inline AttackSolution majority_control(const ElectionInstance& inst, const AttackConstraint& constraint,
                                       double eps = kDefaultEps, const ControlOptions& options = {}) {
  validate_constraint(constraint, inst.num_issues());
  const Vector& w = inst.weights();
  const bool budget = detail::budget_regime(constraint);
  AttackSolution out;
  out.eps_used = eps;

  if (admissible(constraint, w, w) && plurality_outcome(deterministic_tally(inst, w)) == 0) {
    out.verdict = Verdict::kWin;
    out.assignment = deterministic_tally(inst, w).chosen;
    detail::finish(out, inst, constraint);
    return out;
  }

  const DedupInstance d = dedup(inst);
  const PreferenceTensor tensor(d.unique);
  const int u = d.unique.num_voters();
  const int m = inst.num_candidates();

  const auto reach_results = parallel_map(static_cast<std::size_t>(u * m), options.threads, [&](std::size_t idx) {
    const int g = static_cast<int>(idx) / m, i = static_cast<int>(idx) % m;
    return solve_vote_rows(w, single_assignment_rows(tensor, g, i), constraint, eps);
  });
  out.programs_solved += reach_results.size();
  std::vector<std::vector<int>> reach(static_cast<std::size_t>(u));
  double total = 1.0;
  for (int g = 0; g < u; ++g) {
    for (int i = 0; i < m; ++i) {
      if (reach_results[static_cast<std::size_t>(g * m + i)].feasible) reach[static_cast<std::size_t>(g)].push_back(i);
    }
    total *= static_cast<double>(reach[static_cast<std::size_t>(g)].size());
  }
  if (total > static_cast<double>(options.enumeration_cap)) {
    throw Error(ErrorCode::kEnumerationCapExceeded,
                "assignment space exceeds the enumeration cap of " + std::to_string(options.enumeration_cap));
  }

  // Winning assignments as mixed-radix codes over the reachable lists.
  std::vector<std::uint64_t> winning;
  const std::uint64_t count = total == 0.0 ? 0 : static_cast<std::uint64_t>(total);
  auto decode = [&](std::uint64_t code) {
    std::vector<int> choice(static_cast<std::size_t>(u));
    for (int g = u - 1; g >= 0; --g) {
      const auto& opts = reach[static_cast<std::size_t>(g)];
      choice[static_cast<std::size_t>(g)] = opts[code % opts.size()];
      code /= opts.size();
    }
    return choice;
  };
  for (std::uint64_t code = 0; code < count; ++code) {
    const std::vector<int> choice = decode(code);
    std::vector<long long> votes(static_cast<std::size_t>(m), 0);
    for (int g = 0; g < u; ++g) votes[static_cast<std::size_t>(choice[static_cast<std::size_t>(g)])] += d.multiplicity[static_cast<std::size_t>(g)];
    if (*std::max_element(votes.begin(), votes.end()) == votes[0]) winning.push_back(code);
  }

  auto solve_code = [&](std::size_t i) {
    const std::vector<int> choice = decode(winning[i]);
    std::vector<VoteRow> rows;
    for (int g = 0; g < u; ++g) {
      auto more = single_assignment_rows(tensor, g, choice[static_cast<std::size_t>(g)]);
      rows.insert(rows.end(), more.begin(), more.end());
    }
    return solve_vote_rows(w, rows, constraint, eps);
  };

  // Budget: every winning assignment competes on norm. Interval: scan in
  // fixed-size blocks and stop at the first block holding a feasible
  // assignment. The block size does not depend on the thread count, so
  // programs_solved is reproducible.
  constexpr std::size_t kIntervalBlock = 64;
  const std::size_t block = budget ? winning.size() : kIntervalBlock;
  UnanimityResult best;
  std::size_t best_index = winning.size();
  for (std::size_t start = 0; start < winning.size() && best_index == winning.size(); start += block) {
    const std::size_t len = std::min(block, winning.size() - start);
    const auto results = parallel_map(len, options.threads, [&](std::size_t i) { return solve_code(start + i); });
    out.programs_solved += len;
    for (std::size_t i = 0; i < len; ++i) {
      if (detail::better_program(results[i], best_index == winning.size() ? nullptr : &best, budget)) {
        best = results[i];
        best_index = start + i;
      }
    }
  }

  if (best_index == winning.size()) {
    out.verdict = Verdict::kNoWin;
    detail::finish(out, inst, constraint);
    return out;
  }
  out.x = best.x;
  out.verdict = best.used_eps_slack ? Verdict::kWinWithEpsSlack : Verdict::kWin;
  const std::vector<int> choice = decode(winning[best_index]);
  for (int j = 0; j < inst.num_voters(); ++j) out.assignment.push_back(choice[static_cast<std::size_t>(d.group[static_cast<std::size_t>(j)])]);
  detail::finish(out, inst, constraint);
  return out;
}

}  // namespace salience
