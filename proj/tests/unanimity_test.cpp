#include "salience/unanimity.hpp"

#include <random>

#include <gtest/gtest.h>

#include "salience/oracles.hpp"

namespace salience {
namespace {

// c0 = (1, 1), c1 = (0, 0); a single voter at (0, 1) has a = (-1, 1).
ElectionInstance lopsided(double p) {
  Matrix c(2, 2);
  c << 1, 1, 0, 0;
  Matrix v(1, 2);
  v << 0, 1;
  Vector w(2);
  w << 1.0, 0.0;
  return ElectionInstance(c, v, w, p);
}

TEST(UnanimityBudget, EmptyDemographic) {
  const auto inst = lopsided(1.0);
  const PreferenceTensor t(inst);
  const auto r = unanimity_budget(inst, t, {}, NormBudget{2.0, 0.0});
  ASSERT_TRUE(r.feasible);
  EXPECT_EQ(r.norm_value, 0.0);
  EXPECT_LE(r.x.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(UnanimityBudget, VoterAtPreferredCandidate) {
  Matrix c(2, 3);
  c << 1, 0, 1, 0, 1, 0;
  const ElectionInstance inst(c, c.topRows(1), Vector::Constant(3, 1.0 / 3), 2.0);
  const PreferenceTensor t(inst);
  for (double p : {1.0, 2.0, 3.0, kInfinity}) {
    const auto r = unanimity_budget(inst, t, {0}, NormBudget{p, 0.0});
    ASSERT_TRUE(r.feasible) << p;
    EXPECT_LE(r.x.cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(UnanimityBudget, MinimalShiftPerNorm) {
  const auto inst = lopsided(1.0);
  const PreferenceTensor t(inst);
  // The voter needs w'_1 >= 1/2, so x = (-1/2, 1/2) at minimum.
  const double expected[] = {1.0, std::sqrt(0.5), std::pow(2.0 * std::pow(0.5, 3.0), 1.0 / 3.0), 0.5};
  const double norms[] = {1.0, 2.0, 3.0, kInfinity};
  for (int i = 0; i < 4; ++i) {
    const auto r = unanimity_budget(inst, t, {0}, NormBudget{norms[i], 10.0});
    ASSERT_TRUE(r.feasible);
    EXPECT_NEAR(r.norm_value, expected[i], 1e-6) << norms[i];
    EXPECT_NEAR(r.x[1], 0.5, 1e-4);
  }
  EXPECT_FALSE(unanimity_budget(inst, t, {0}, NormBudget{1.0, 0.999}).feasible);
  EXPECT_TRUE(unanimity_budget(inst, t, {0}, NormBudget{1.0, 1.0}).feasible);
  // Grid confirmation of the L1 value.
  const auto g = grid_search(inst, NormBudget{1.0, 10.0}, MaxSupportObjective{}, 1e-3);
  double best_norm = kInfinity;
  for_each_grid_point(1000, 2, [&](const Vector& wp) {
    if (t.margin(0, 0, 1, wp) >= 0) best_norm = std::min(best_norm, (wp - inst.weights()).lpNorm<1>());
  });
  EXPECT_EQ(g.value, 1.0);
  EXPECT_NEAR(best_norm, 1.0, 1e-12);
}

TEST(UnanimityBudget, EpsSlackReported) {
  const auto inst = lopsided(1.0);
  const PreferenceTensor t(inst);
  const double exact = std::pow(2.0 * std::pow(0.5, 3.0), 1.0 / 3.0);
  const auto r = unanimity_budget(inst, t, {0}, NormBudget{3.0, exact - 1e-7}, 1e-6);
  EXPECT_TRUE(r.feasible);
  EXPECT_TRUE(r.used_eps_slack);
  EXPECT_FALSE(unanimity_budget(inst, t, {0}, NormBudget{3.0, exact - 1e-3}, 1e-6).feasible);
}

TEST(UnanimityInterval, Examples) {
  const auto inst = lopsided(1.0);
  const PreferenceTensor t(inst);
  EXPECT_TRUE(unanimity_interval(inst, t, {}, IntervalBox::full(2)).feasible);
  IntervalBox good{{{0.3, 0.3}, {0.7, 0.7}}};
  const auto r = unanimity_interval(inst, t, {0}, good);
  ASSERT_TRUE(r.feasible);
  EXPECT_NEAR(r.x[0], -0.7, 1e-12);
  EXPECT_NEAR(r.x[1], 0.7, 1e-12);
  IntervalBox bad{{{0.7, 0.7}, {0.3, 0.3}}};
  EXPECT_FALSE(unanimity_interval(inst, t, {0}, bad).feasible);
}

TEST(UnanimityInterval, MonotoneUnderSubsets) {
  std::mt19937 rng(8);
  std::bernoulli_distribution coin(0.5);
  for (int trial = 0; trial < 40; ++trial) {
    Matrix c(2, 4), v(5, 4);
    c.row(0).setOnes();
    c.row(1).setZero();
    for (int j = 0; j < 5; ++j)
      for (int k = 0; k < 4; ++k) v(j, k) = coin(rng) ? 1.0 : 0.0;
    const ElectionInstance inst(c, v, Vector::Constant(4, 0.25), 1.0);
    const PreferenceTensor t(inst);
    IntervalBox box{{{0.0, 0.5}, {0.1, 0.6}, {0.0, 1.0}, {0.05, 0.4}}};
    std::vector<int> all = {0, 1, 2, 3, 4};
    const auto r = unanimity_interval(inst, t, all, box);
    if (!r.feasible) continue;
    const Vector wp = inst.weights() + r.x;
    for (int mask = 0; mask < 32; ++mask) {
      std::vector<int> sub;
      for (int j = 0; j < 5; ++j)
        if (mask & (1 << j)) sub.push_back(j);
      EXPECT_TRUE(unanimity_interval(inst, t, sub, box).feasible);
      for (int j : sub) EXPECT_GE(t.margin(j, 0, 1, wp), -1e-9);
    }
  }
}

TEST(UnanimityBudget, EuclideanKktAndLpAgreement) {
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    Matrix c(2, 3), v(3, 3);
    for (auto* m : {&c, &v})
      for (Eigen::Index r = 0; r < m->rows(); ++r)
        for (int k = 0; k < 3; ++k) (*m)(r, k) = u(rng);
    const ElectionInstance inst(c, v, Vector::Constant(3, 1.0 / 3), 1.5);
    const PreferenceTensor t(inst);
    const auto l1 = unanimity_budget(inst, t, {0, 1, 2}, NormBudget{1.0, kInfinity});
    const auto l2 = unanimity_budget(inst, t, {0, 1, 2}, NormBudget{2.0, kInfinity});
    const auto linf = unanimity_budget(inst, t, {0, 1, 2}, NormBudget{kInfinity, kInfinity});
    ASSERT_EQ(l1.feasible, l2.feasible);
    ASSERT_EQ(l1.feasible, linf.feasible);
    if (!l1.feasible) continue;
    // Norm inequalities between the three optima.
    EXPECT_LE(linf.norm_value, l2.norm_value + 1e-9);
    EXPECT_LE(l2.norm_value, l1.norm_value + 1e-9);
    EXPECT_LE(l1.norm_value, lp_norm(l2.x, 1.0) + 1e-9);
    EXPECT_LE(l2.norm_value, lp_norm(l1.x, 2.0) + 1e-9);
    EXPECT_LE(linf.norm_value, lp_norm(l1.x, kInfinity) + 1e-9);
    for (int j = 0; j < 3; ++j) EXPECT_GE(t.margin(j, 0, 1, inst.weights() + l2.x), -1e-9);
  }
}

TEST(AssignmentFeasibility, CurrentWinnersNeedNoShift) {
  std::mt19937 rng(10);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix c(3, 3), v(4, 3);
    for (auto* m : {&c, &v})
      for (Eigen::Index r = 0; r < m->rows(); ++r)
        for (int k = 0; k < 3; ++k) (*m)(r, k) = u(rng);
    const ElectionInstance inst(c, v, Vector::Constant(3, 1.0 / 3), 2.0);
    const PreferenceTensor t(inst);
    const Tally tally = deterministic_tally(t, inst.weights());
    // Strict margins against earlier candidates may fail on exact ties, which
    // random positions avoid.
    const auto r = assignment_feasibility(inst, t, tally.chosen, NormBudget{2.0, 0.0});
    EXPECT_TRUE(r.feasible);
  }
}

TEST(AssignmentFeasibility, TwoCandidatesMatchesUnanimity) {
  const auto inst = lopsided(2.0);
  const PreferenceTensor t(inst);
  for (double B : {0.5, 0.8}) {
    const auto a = assignment_feasibility(inst, t, {0}, NormBudget{2.0, B});
    const auto u = unanimity_budget(inst, t, {0}, NormBudget{2.0, B});
    EXPECT_EQ(a.feasible, u.feasible);
    EXPECT_NEAR(a.norm_value, u.norm_value, 1e-12);
  }
}

TEST(AssignmentFeasibility, ThreeCandidatesMatchesGrid) {
  Matrix c(3, 3);
  c << 1, 0, 0, 0, 1, 0, 0, 0, 1;
  Matrix v(1, 3);
  v << 0, 0, 1;  // sits on the third candidate
  const ElectionInstance inst(c, v, Vector::Constant(3, 1.0 / 3), 1.0);
  const PreferenceTensor t(inst);
  bool grid_feasible = false;
  for_each_grid_point(100, 3, [&](const Vector& wp) {
    if (choose_candidate(t, 0, wp) == 1) grid_feasible = true;
  });
  const auto r = assignment_feasibility(inst, t, {1}, NormBudget{1.0, kInfinity});
  EXPECT_EQ(r.feasible, grid_feasible);
  if (r.feasible) EXPECT_EQ(choose_candidate(t, 0, inst.weights() + r.x), 1);
}

TEST(AssignmentFeasibility, RejectsIncompleteAssignment) {
  const auto inst = lopsided(2.0);
  const PreferenceTensor t(inst);
  EXPECT_THROW(assignment_feasibility(inst, t, {}, NormBudget{2.0, 1.0}), Error);
  EXPECT_THROW(assignment_feasibility(inst, t, {2}, NormBudget{2.0, 1.0}), Error);
}

}  // namespace
}  // namespace salience
